"""Classical flags raised by level-1 EC and carried along level-1 lines.

A flag stands for "this level-1 qubit may carry a logical error of type
X (or Z)".  Flags follow the same CNOT rules as errors: X flags copy from
control to target, Z flags from target to control.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional


@dataclass(frozen=True, order=True)
class FlagId:
    id: int
    type: str = field(compare=False)
    line: Optional[int] = field(default=None, compare=False)
    timestep: Optional[int] = field(default=None, compare=False)


@dataclass
class FlagSet:
    """Flags present on each level-1 line, split by type."""

    on: dict = field(default_factory=dict)
    trace: Optional[list] = None
    _next_id: int = 0

    def get(self, line: int, ftype: str) -> set:
        return self.on.get(line, {}).get(ftype, set())

    def _slot(self, line: int, ftype: str) -> set:
        return self.on.setdefault(line, {"X": set(), "Z": set()})[ftype]

    def _log(self, *entry) -> None:
        if self.trace is not None:
            self.trace.append(entry)

    def lines_with(self, flag: FlagId, lines: Optional[Iterable[int]] = None) -> list:
        pool = self.on if lines is None else lines
        return [ln for ln in pool if flag in self.get(ln, flag.type)]

    def all_flags(self) -> set:
        out = set()
        for slots in self.on.values():
            out |= slots["X"] | slots["Z"]
        return out

    def dump_trace(self) -> str:
        return json.dumps(self.trace or [])


def raise_flag(
    flags: FlagSet,
    line: int,
    ftype: str,
    syndrome: int,
    flag_id: Optional[int] = None,
    timestep: Optional[int] = None,
) -> Optional[FlagId]:
    """Put a fresh flag on ``line`` if ``syndrome`` is nonzero.

    Returns the new flag (or ``None``).  Ids default to a per-set counter;
    the simulators pass the raising site's id, which is unique per trial.
    """
    if not syndrome:
        return None
    if flag_id is None:
        flag_id = flags._next_id
        flags._next_id += 1
    flag = FlagId(flag_id, ftype, line, timestep)
    flags._slot(line, ftype).add(flag)
    flags._log("raise", flag_id, ftype, line)
    return flag


def propagate_flags(flags: FlagSet, gate) -> FlagSet:
    """Move flags through a level-1 gadget (an ``L2Gate``)."""
    kind = gate.kind
    if kind == "cnot":
        c, t = gate.lines
        x_new = flags.get(c, "X") - flags.get(t, "X")
        z_new = flags.get(t, "Z") - flags.get(c, "Z")
        if x_new:
            flags._slot(t, "X").update(x_new)
            for f in sorted(x_new):
                flags._log("copy", f.id, "X", c, t)
        if z_new:
            flags._slot(c, "Z").update(z_new)
            for f in sorted(z_new):
                flags._log("copy", f.id, "Z", t, c)
    elif kind in ("prep", "meas"):
        for ln in gate.lines:
            if flags.on.pop(ln, None) is not None:
                flags._log("reset", ln)
    elif kind != "memory":
        raise ValueError(f"unknown gadget {kind!r}")
    return flags


def clear_matched_flags(
    flags: FlagSet, observed: Iterable[FlagId], data_lines: Optional[Iterable[int]] = None
) -> FlagSet:
    """Remove every observed flag from the given data lines (default: all lines)."""
    observed = set(observed)
    if not observed:
        return flags
    lines = list(flags.on) if data_lines is None else list(data_lines)
    for ln in lines:
        slots = flags.on.get(ln)
        if not slots:
            continue
        for ftype in ("X", "Z"):
            gone = slots[ftype] & observed
            if gone:
                slots[ftype] -= gone
                for f in sorted(gone):
                    flags._log("clear", f.id, ftype, ln)
    return flags
