"""Location-by-location simulation of one trial.

Slow but direct: every location goes through :func:`propagate_location`
and every flag through :mod:`mpec.flags`.  The batch engine is checked
against this module.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .circuit import (
    Circuit,
    L1Measure,
    L1Syndrome,
    L2Gate,
    L2Syndrome,
    LINE_PATTERN,
    x_logical_support,
    z_logical_support,
)
from .flags import FlagId, FlagSet, clear_matched_flags, propagate_flags, raise_flag
from .level1 import block_line_parities, decode_syndrome, majority, syndrome_of_lines
from .mpec import (
    SuperSyndrome,
    assemble_super_syndrome,
    decision_trace,
    decode_level2,
    find_flag_match,
    position_line,
)
from .pauli_core import PauliFrame, apply_fault, apply_pauli, propagate_location

MEASUREMENTS = ("MeasZ", "MeasX")


@dataclass
class TrialRecord:
    passed: bool
    failures: dict
    frame: PauliFrame
    flags: FlagSet
    decisions: list = field(default_factory=list)
    l1_syndromes: dict = field(default_factory=dict)


def _apply_logical(frame: PauliFrame, qubits: tuple, etype: str) -> None:
    support = x_logical_support(qubits) if etype == "X" else z_logical_support(qubits)
    for q in support:
        apply_pauli(frame, q, etype)


def simulate_trial(
    circuit: Circuit,
    errors: Iterable,
    decoder: str,
    trace: bool = False,
    max_match: int = 3,
) -> TrialRecord:
    """Run ``errors`` (``(location_index, pauli)`` pairs) through ``circuit``."""
    if decoder not in ("standard", "mpec"):
        raise ValueError(f"unknown decoder {decoder!r}")
    faults = defaultdict(list)
    for idx, op in errors:
        faults[idx].append(op)
    frame = PauliFrame.clean(circuit.qubit_count)
    flags = FlagSet(trace=[] if trace else None)
    l1_out: dict = {}
    record = TrialRecord(True, {}, frame, flags)
    lines = circuit.lines

    for _, locs, events in circuit.steps:
        for loc in locs:
            ops = faults.get(loc.index)
            if ops and loc.kind in MEASUREMENTS:
                for op in ops:
                    apply_fault(frame, loc.qubits, op)
            propagate_location(frame, loc)
            if ops and loc.kind not in MEASUREMENTS:
                for op in ops:
                    apply_fault(frame, loc.qubits, op)
        for ev in events:
            if isinstance(ev, L1Syndrome):
                s = 0
                for g in range(3):
                    for k in range(3):
                        s ^= frame.measured[ev.meas[g][k]] << k
                line = decode_syndrome(s)
                if line is not None:
                    apply_pauli(frame, ev.corrections[line], ev.etype)
                if ev.line is not None:
                    raise_flag(flags, ev.line, ev.etype, s, flag_id=ev.site, timestep=ev.timestep)
                if s:
                    record.l1_syndromes[ev.site] = s
            elif isinstance(ev, L1Measure):
                m = [frame.measured[q] for q in ev.qubits]
                if ev.etype == "X":
                    par = [m[c] ^ m[3 + c] ^ m[6 + c] for c in range(3)]
                else:
                    par = [m[3 * r] ^ m[3 * r + 1] ^ m[3 * r + 2] for r in range(3)]
                l1_out[ev.line] = majority(par)
                s = syndrome_of_lines(par)
                raise_flag(flags, ev.line, ev.etype, s, flag_id=ev.site, timestep=ev.timestep)
                if s:
                    record.l1_syndromes[ev.site] = s
            elif isinstance(ev, L2Gate):
                propagate_flags(flags, ev)
            elif isinstance(ev, L2Syndrome):
                ss = assemble_super_syndrome(
                    ev.etype,
                    [[l1_out[a] for a in row] for row in ev.ancillas],
                    [[flags.get(a, ev.etype) for a in row] for row in ev.ancillas],
                    {pos: flags.get(d, ev.etype) for pos, d in enumerate(ev.data)},
                )
                if decoder == "mpec":
                    decision = decode_level2(ss, "mpec", max_size=max_match)
                else:
                    decision = decode_level2(ss, "standard")
                for pos in decision.corrections:
                    _apply_logical(frame, lines[ev.data[pos]].qubits, ev.etype)
                if decision.cleared:
                    clear_matched_flags(flags, decision.cleared, ev.data)
                if trace:
                    entry = decision_trace(ss, decision)
                    entry.update(index=ev.index, block=ev.block, section=ev.section)
                    record.decisions.append(entry)

    record.failures = judge_output(circuit, frame, flags, decoder)
    record.passed = not any(record.failures.values())
    return record


def judge_output(circuit: Circuit, frame: PauliFrame, flags: FlagSet, decoder: str) -> dict:
    """Apply a noiseless EC cycle of the same scheme to the output blocks.

    Returns ``{(block, etype): failed}``.
    """
    out = {}
    for block, data_lines in circuit.outputs.items():
        per_line = [
            block_line_parities(
                [int(frame.x[q]) for q in circuit.lines[d].qubits],
                [int(frame.z[q]) for q in circuit.lines[d].qubits],
            )
            for d in data_lines
        ]
        for t_i, etype in enumerate(("X", "Z")):
            logical = [majority(p[t_i]) for p in per_line]
            flagged = [syndrome_of_lines(p[t_i]) != 0 for p in per_line]
            q = _line_parities(etype, logical)
            if decoder == "standard" or syndrome_of_lines(q) == 0:
                out[(block, etype)] = bool(majority(q))
                continue
            carriers: dict = {}
            for pos, d in enumerate(data_lines):
                for f in flags.get(d, etype):
                    carriers.setdefault(f, []).append(pos)
                if flagged[pos]:
                    carriers[FlagId(circuit.n_sites + pos, etype)] = [pos]
            incidence = {}
            for f, positions in carriers.items():
                inc = 0
                for p in positions:
                    inc ^= LINE_PATTERN[position_line(etype, p)]
                incidence[f] = inc
            ss = SuperSyndrome(etype, syndrome_of_lines(q), incidence,
                               {f: tuple(p) for f, p in carriers.items()})
            match = find_flag_match(ss)
            for pos in match.corrections:
                logical[pos] ^= 1
            out[(block, etype)] = bool(majority(_line_parities(etype, logical)))
    return out


def _line_parities(etype: str, logical) -> list:
    if etype == "X":
        return [logical[c] ^ logical[3 + c] ^ logical[6 + c] for c in range(3)]
    return [logical[3 * r] ^ logical[3 * r + 1] ^ logical[3 * r + 2] for r in range(3)]


def run_trial(circuit: Circuit, errors: Iterable, decoder: str) -> bool:
    return simulate_trial(circuit, errors, decoder).passed
