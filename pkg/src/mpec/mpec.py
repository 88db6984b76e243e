"""Level-2 decoding from the super syndrome (syndrome plus flags).

Positions inside a level-2 block are numbered ``3 * row + col`` like the
physical qubits of a level-1 block.  For X errors the lines are columns,
for Z errors rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Optional

from .level1 import decode_syndrome

MAX_MATCH = 3


@dataclass(frozen=True)
class SuperSyndrome:
    etype: str
    syndrome: int
    ancilla_flags: Mapping  # FlagId -> packed incidence
    data_flags: Mapping  # FlagId -> tuple of data positions carrying it

    @property
    def observed(self) -> frozenset:
        return frozenset(self.ancilla_flags)


@dataclass(frozen=True)
class MatchResult:
    matched: Optional[tuple]
    corrections: frozenset
    used_fallback: bool
    candidates: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Decision:
    corrections: frozenset
    cleared: frozenset
    match: Optional[MatchResult]


def line_position(etype: str, line: int) -> int:
    """Representative data position for a whole-line correction."""
    return line if etype == "X" else 3 * line


def position_line(etype: str, pos: int) -> int:
    return pos % 3 if etype == "X" else pos // 3


def standard_corrections(etype: str, syndrome: int) -> frozenset:
    line = decode_syndrome(syndrome)
    return frozenset() if line is None else frozenset({line_position(etype, line)})


def assemble_super_syndrome(
    etype: str, outcomes, ancilla_flags, data_flags: Mapping
) -> SuperSyndrome:
    """Combine readouts and flags of one level-2 extraction.

    ``outcomes[g][k]`` is the decoded flip of the ancilla for pair ``k`` in
    group ``g``; ``ancilla_flags[g][k]`` the flags on it at readout, and
    ``data_flags`` maps data position -> flags present there.  Parallel
    groups and flag copies are added in binary.
    """
    syndrome = 0
    incidence: dict = {}
    for g in range(3):
        for k in range(3):
            syndrome ^= (outcomes[g][k] & 1) << k
            for f in ancilla_flags[g][k]:
                incidence[f] = incidence.get(f, 0) ^ (1 << k)
    carried: dict = {}
    for pos in sorted(data_flags):
        for f in data_flags[pos]:
            if f in incidence:
                carried.setdefault(f, []).append(pos)
    return SuperSyndrome(
        etype,
        syndrome,
        incidence,
        {f: tuple(carried.get(f, ())) for f in incidence},
    )


def _mask(positions) -> int:
    m = 0
    for p in positions:
        m ^= 1 << p
    return m


def find_flag_match(ss: SuperSyndrome, max_size: int = MAX_MATCH, collect: bool = False) -> MatchResult:
    """Smallest set of flags whose incidences add up to the syndrome.

    Within a size class the set implying the fewest data corrections wins,
    then the lexicographically smallest id tuple.  Without a match the
    bare syndrome is decoded conventionally.
    """
    s = ss.syndrome
    if s == 0:
        return MatchResult(None, frozenset(), False)
    # a zero-incidence flag never belongs to a smallest match
    flags = sorted(f for f, inc in ss.ancilla_flags.items() if inc)
    inc = [ss.ancilla_flags[f] for f in flags]
    masks = [_mask(ss.data_flags.get(f, ())) for f in flags]
    candidates: dict = {}
    for size in range(1, max_size + 1):
        best = None
        for combo in combinations(range(len(flags)), size):
            acc = 0
            for i in combo:
                acc ^= inc[i]
            if acc != s:
                continue
            corr = 0
            for i in combo:
                corr ^= masks[i]
            n = bin(corr).count("1")
            if collect:
                candidates.setdefault(size, []).append([flags[i].id for i in combo])
            if best is None or n < best[0]:
                best = (n, combo, corr)
        if best is not None:
            _, combo, corr = best
            positions = frozenset(p for p in range(9) if corr >> p & 1)
            return MatchResult(tuple(flags[i] for i in combo), positions, False, candidates)
    return MatchResult(None, standard_corrections(ss.etype, s), True, candidates)


def decode_level2(ss: SuperSyndrome, mode: str, max_size: int = MAX_MATCH) -> Decision:
    """Corrections for one level-2 EC box plus the flags to clear.

    ``standard`` ignores flags; ``mpec`` searches for a flag match and
    clears every flag that reached the ancillas.
    """
    if mode == "standard":
        return Decision(standard_corrections(ss.etype, ss.syndrome), frozenset(), None)
    if mode != "mpec":
        raise ValueError(f"unknown decoder mode {mode!r}")
    match = find_flag_match(ss, max_size=max_size)
    return Decision(match.corrections, ss.observed, match)


def decision_trace(ss: SuperSyndrome, decision: Decision) -> dict:
    match = find_flag_match(ss, collect=True) if decision.match is not None else None
    return {
        "etype": ss.etype,
        "syndrome": [ss.syndrome & 1, ss.syndrome >> 1 & 1, ss.syndrome >> 2 & 1],
        "flags": {str(f.id): inc for f, inc in sorted(ss.ancilla_flags.items())},
        "candidates": {str(k): v for k, v in (match.candidates.items() if match else [])},
        "matched": [f.id for f in decision.match.matched]
        if decision.match and decision.match.matched
        else None,
        "fallback": bool(decision.match and decision.match.used_fallback),
        "corrections": sorted(decision.corrections),
    }
