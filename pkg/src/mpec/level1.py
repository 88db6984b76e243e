"""Conventional Bacon-Shor syndrome decoding and level-1 outcome classes."""

from __future__ import annotations

from enum import Enum
from typing import Optional, Sequence

from .circuit import LINE_PATTERN

# packed syndrome -> line index; odd-weight syndromes are parity mismatches
_DECODE = {0: None}
for _line, _pattern in enumerate(LINE_PATTERN):
    _DECODE[_pattern] = _line


class BlockOutcome(Enum):
    """Outcome of a level-1 EC block and its weight (order in p)."""

    US = 0
    FS = 1
    FF = 2
    UF = 3

    @property
    def weight(self) -> int:
        return self.value

    @property
    def flagged(self) -> bool:
        return self in (BlockOutcome.FS, BlockOutcome.FF)

    @property
    def failed(self) -> bool:
        return self in (BlockOutcome.FF, BlockOutcome.UF)


def pack_syndrome(bits: Sequence[int]) -> int:
    """``(s12, s23, s13)`` -> ``s12 | s23 << 1 | s13 << 2``."""
    s12, s23, s13 = bits
    return (s12 & 1) | (s23 & 1) << 1 | (s13 & 1) << 2


def unpack_syndrome(s: int) -> tuple:
    return (s & 1, (s >> 1) & 1, (s >> 2) & 1)


def decode_syndrome(s) -> Optional[int]:
    """Line (0, 1 or 2) to correct, or ``None``.

    Accepts a packed int or an ``(s12, s23, s13)`` triple.  Odd-weight
    syndromes cannot come from data errors alone and get no correction.
    """
    if not isinstance(s, int):
        s = pack_syndrome(s)
    return _DECODE.get(s)


def syndrome_of_lines(errors: Sequence[int]) -> int:
    """Packed syndrome produced by errors on the given lines (bits in ``errors``)."""
    s = 0
    for line, e in enumerate(errors):
        if e:
            s ^= LINE_PATTERN[line]
    return s


def majority(bits: Sequence[int]) -> int:
    a, b, c = bits
    return (a & b) | (b & c) | (a & c)


def classify_outcome(flagged: bool, failed: bool) -> BlockOutcome:
    """Table-style outcome from ground truth (analysis only)."""
    if flagged:
        return BlockOutcome.FF if failed else BlockOutcome.FS
    return BlockOutcome.UF if failed else BlockOutcome.US


def block_line_parities(x_bits: Sequence[int], z_bits: Sequence[int]) -> tuple:
    """Per-line error parities of a 3x3 block: X by column, Z by row."""
    xp = tuple((x_bits[c] ^ x_bits[3 + c] ^ x_bits[6 + c]) & 1 for c in range(3))
    zp = tuple((z_bits[3 * r] ^ z_bits[3 * r + 1] ^ z_bits[3 * r + 2]) & 1 for r in range(3))
    return xp, zp


def ideal_block_decode(parities: Sequence[int]) -> tuple:
    """Noiseless EC on one error type of one block.

    Returns ``(syndrome, logical_error)`` where ``logical_error`` says
    whether minimum-weight correction leaves a logical operator.
    """
    return syndrome_of_lines(parities), majority(parities)


# ------------------------------------------------------- fault enumeration


def _raw_effects(circuit):
    """Per single fault: measured bits and final data frame, before any decoding.

    Propagation is linear and the decoder's frame updates never spread
    (corrections sit on CNOT targets or idle qubits), so the effect of a
    fault set is the XOR of single-fault effects followed by decoding.
    """
    import numpy as np

    from .circuit import L1Syndrome
    from .pauli_core import SINGLE_PAULIS, TWO_QUBIT_PAULIS, PauliFrame, apply_fault, propagate_location

    syn_events = [e for e in circuit.events if isinstance(e, L1Syndrome)]
    data = circuit.lines[circuit.outputs["data"][0]].qubits
    effects = []
    for loc in circuit.locations:
        ops = TWO_QUBIT_PAULIS if loc.kind == "CNOT" else SINGLE_PAULIS
        for op in ops:
            frame = PauliFrame.clean(circuit.qubit_count)
            for l2 in circuit.locations:
                if l2.index == loc.index and l2.kind in ("MeasZ", "MeasX"):
                    apply_fault(frame, l2.qubits, op)
                propagate_location(frame, l2)
                if l2.index == loc.index and l2.kind not in ("MeasZ", "MeasX"):
                    apply_fault(frame, l2.qubits, op)
            syn = []
            for ev in syn_events:
                s = 0
                for g in range(3):
                    for k in range(3):
                        s ^= frame.measured.get(ev.meas[g][k], 0) << k
                syn.append(s)
            effects.append((loc.index, op, tuple(syn),
                            np.array([frame.x[q] for q in data], dtype=np.uint8),
                            np.array([frame.z[q] for q in data], dtype=np.uint8)))
    return syn_events, data, effects


def enumerate_block_outcomes(max_faults: int = 2):
    """Outcome counts of a two-half level-1 EC block over all fault sets.

    Every set of at most ``max_faults`` faults on distinct locations (all
    Paulis) is decoded.  A type is flagged when the block measured a nonzero
    syndrome of that type or when the syndrome seen by a following ideal EC
    is nonzero: errors created after the last readout are flagged by the
    next block.  Returns ``{n_faults: Counter((etype, BlockOutcome))}`` and
    the worst number of line errors left after single faults.
    """
    from collections import Counter
    from itertools import combinations

    import numpy as np

    circuit = _level1_both()
    syn_events, data, effects = _raw_effects(circuit)
    corr_pos = {ev.site: [data.index(q) for q in ev.corrections] for ev in syn_events}
    counts = {n: Counter() for n in range(max_faults + 1)}
    worst_single = 0

    def judge(items):
        x = np.zeros(9, dtype=np.uint8)
        z = np.zeros(9, dtype=np.uint8)
        syn = [0] * len(syn_events)
        for _, _, s, fx, fz in items:
            x ^= fx
            z ^= fz
            syn = [a ^ b for a, b in zip(syn, s)]
        out = {}
        lines_left = 0
        for ev, s in zip(syn_events, syn):
            line = decode_syndrome(s)
            if line is not None:
                plane = x if ev.etype == "X" else z
                plane[corr_pos[ev.site][line]] ^= 1
        xp, zp = block_line_parities(x, z)
        for etype, par in (("X", xp), ("Z", zp)):
            measured = any(s for ev, s in zip(syn_events, syn) if ev.etype == etype)
            trailing, failed = ideal_block_decode(par)
            out[etype] = classify_outcome(measured or trailing != 0, bool(failed))
            lines_left = max(lines_left, int(sum(par)))
        return out, lines_left

    res, _ = judge([])
    for etype, o in res.items():
        counts[0][(etype, o)] += 1
    for n in range(1, max_faults + 1):
        for combo in combinations(range(len(effects)), n):
            items = [effects[i] for i in combo]
            if len({it[0] for it in items}) < n:
                continue  # one fault per location
            res, left = judge(items)
            if n == 1:
                worst_single = max(worst_single, left)
            for etype, o in res.items():
                counts[n][(etype, o)] += 1
    return counts, worst_single


def _level1_both():
    from .circuit import build_level1_ec

    return build_level1_ec("both")
