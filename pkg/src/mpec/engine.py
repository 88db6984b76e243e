"""Bit-sliced batch simulator.

Each physical qubit owns a row of ``W`` uint64 words for X errors and one
for Z errors; bit ``b`` of word ``w`` belongs to trial ``64 * w + b``.
Decoding is vectorised across trials.  Flag propagation does not depend on
the errors, only on whether a flag was raised, so the life of every flag
(which ancillas it reaches, which data positions carry it, whether it is
cleared) is worked out once per circuit by :func:`compile_circuit`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
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
from .flags import FlagSet, clear_matched_flags, propagate_flags, raise_flag
from .mpec import line_position, position_line

ONE = np.uint64(1)
_DECODE = np.array([-1] * 8, dtype=np.int64)
for _j, _pat in enumerate(LINE_PATTERN):
    _DECODE[_pat] = _j


@dataclass
class L2Plan:
    etype: str
    block: str
    anc: np.ndarray  # (3, 3) line ids
    support: np.ndarray  # (9, 3) qubits flipped by a logical correction per position
    sites: np.ndarray  # flags that can reach this box with nonzero incidence
    incidence: np.ndarray
    masks: np.ndarray


@dataclass
class FinalPlan:
    block: str
    etype: str
    qubits: np.ndarray  # (9 positions, 9 qubits)
    sites: np.ndarray
    incidence: np.ndarray
    masks: np.ndarray


@dataclass
class Program:
    circuit: Circuit
    n_qubits: int
    n_lines: int
    n_sites: int
    loc_key: np.ndarray  # 2 * timestep + (0 before gate, 1 after)
    loc_q0: np.ndarray
    loc_q1: np.ndarray
    is_cnot: np.ndarray
    steps: list = field(default_factory=list)
    finals: list = field(default_factory=list)


def _group(events):
    out = []
    for ev in events:
        kind = type(ev)
        if out and out[-1][0] is kind:
            out[-1][1].append(ev)
        else:
            out.append((kind, [ev]))
    return out


def _mask(positions) -> int:
    m = 0
    for p in positions:
        m ^= 1 << p
    return m


def compile_circuit(circuit: Circuit) -> Program:
    """Lower ``circuit`` to index arrays and precompute flag lives."""
    locs = circuit.locations
    n = len(locs)
    loc_key = np.empty(n, dtype=np.int64)
    loc_q0 = np.empty(n, dtype=np.int64)
    loc_q1 = np.full(n, -1, dtype=np.int64)
    is_cnot = np.zeros(n, dtype=bool)
    for loc in locs:
        i = loc.index
        loc_key[i] = 2 * loc.timestep + (0 if loc.kind in ("MeasZ", "MeasX") else 1)
        loc_q0[i] = loc.qubits[0]
        if loc.kind == "CNOT":
            loc_q1[i] = loc.qubits[1]
            is_cnot[i] = True

    prog = Program(circuit, circuit.qubit_count, len(circuit.lines), circuit.n_sites,
                   loc_key, loc_q0, loc_q1, is_cnot)

    # Raise every flag at once: flags never interact, so one pass gives the
    # life of each flag as if it were the only one.
    flags = FlagSet()
    lines = circuit.lines
    for t, step_locs, events in circuit.steps:
        cn = [l.qubits for l in step_locs if l.kind == "CNOT"]
        ctrl = np.array([q[0] for q in cn], dtype=np.int64)
        tgt = np.array([q[1] for q in cn], dtype=np.int64)
        ops = []
        for kind, evs in _group(events):
            if kind is L1Syndrome:
                for ev in evs:
                    if ev.line is not None:
                        raise_flag(flags, ev.line, ev.etype, 1, flag_id=ev.site)
                for etype in ("X", "Z"):
                    sel = [e for e in evs if e.etype == etype]
                    if sel:
                        ops.append(("l1syn", etype,
                                    np.array([e.meas for e in sel], dtype=np.int64),
                                    np.array([e.corrections for e in sel], dtype=np.int64),
                                    np.array([e.site for e in sel], dtype=np.int64)))
            elif kind is L1Measure:
                for ev in evs:
                    raise_flag(flags, ev.line, ev.etype, 1, flag_id=ev.site)
                for etype in ("X", "Z"):
                    sel = [e for e in evs if e.etype == etype]
                    if sel:
                        ops.append(("l1meas", etype,
                                    np.array([e.qubits for e in sel], dtype=np.int64),
                                    np.array([e.line for e in sel], dtype=np.int64),
                                    np.array([e.site for e in sel], dtype=np.int64)))
            elif kind is L2Gate:
                for ev in evs:
                    propagate_flags(flags, ev)
            elif kind is L2Syndrome:
                plans = []
                for ev in evs:
                    inc: dict = {}
                    for g in range(3):
                        for k in range(3):
                            for f in flags.get(ev.ancillas[g][k], ev.etype):
                                inc[f] = inc.get(f, 0) ^ (1 << k)
                    keep = sorted(f for f, v in inc.items() if v)
                    masks = [
                        _mask(p for p, d in enumerate(ev.data) if f in flags.get(d, ev.etype))
                        for f in keep
                    ]
                    sup = x_logical_support if ev.etype == "X" else z_logical_support
                    plans.append(L2Plan(
                        ev.etype, ev.block, np.array(ev.ancillas, dtype=np.int64),
                        np.array([sup(lines[d].qubits) for d in ev.data], dtype=np.int64),
                        np.array([f.id for f in keep], dtype=np.int64),
                        np.array([inc[f] for f in keep], dtype=np.int64),
                        np.array(masks, dtype=np.int64),
                    ))
                    clear_matched_flags(flags, inc.keys(), ev.data)
                ops.append(("l2syn", plans))
        prog.steps.append((2 * t, ctrl, tgt, ops))

    for block, data_lines in circuit.outputs.items():
        for etype in ("X", "Z"):
            carriers: dict = {}
            for pos, d in enumerate(data_lines):
                for f in flags.get(d, etype):
                    carriers.setdefault(f, []).append(pos)
            keep, incs, masks = [], [], []
            for f in sorted(carriers):
                inc = 0
                for p in carriers[f]:
                    inc ^= LINE_PATTERN[position_line(etype, p)]
                if inc:
                    keep.append(f.id)
                    incs.append(inc)
                    masks.append(_mask(carriers[f]))
            prog.finals.append(FinalPlan(
                block, etype,
                np.array([lines[d].qubits for d in data_lines], dtype=np.int64),
                np.array(keep, dtype=np.int64), np.array(incs, dtype=np.int64),
                np.array(masks, dtype=np.int64),
            ))
    return prog


@dataclass
class FaultBatch:
    """Faults of a batch of trials: ``trial``, ``loc`` and Pauli ``code`` arrays."""

    trial: np.ndarray
    loc: np.ndarray
    code: np.ndarray

    @classmethod
    def from_lists(cls, per_trial) -> "FaultBatch":
        """``per_trial[j]`` is a list of ``(location_index, code)``."""
        t, l, c = [], [], []
        for j, faults in enumerate(per_trial):
            for loc, code in faults:
                t.append(j)
                l.append(loc)
                c.append(code)
        return cls(np.array(t, dtype=np.int64), np.array(l, dtype=np.int64),
                   np.array(c, dtype=np.int64))


def _bit_indices(plane: np.ndarray) -> np.ndarray:
    """Trial indices whose bit is set in a ``(W,)`` uint64 plane."""
    bits = np.unpackbits(plane.view(np.uint8), bitorder="little")
    return np.flatnonzero(bits)


def _gather(planes: np.ndarray, trials: np.ndarray) -> np.ndarray:
    """Bits of ``trials`` from ``planes`` of shape ``(..., W)``."""
    words = trials >> 6
    shifts = (trials & 63).astype(np.uint64)
    return ((planes[..., words] >> shifts) & ONE).astype(np.int64)


def _scatter_positions(plane, support, trials, corr) -> None:
    """Flip the logical support of every data position set in ``corr``."""
    if len(trials) == 0:
        return
    words = trials >> 6
    bits = ONE << (trials & 63).astype(np.uint64)
    for pos in range(9):
        sel = (corr >> pos) & 1 == 1
        if not sel.any():
            continue
        w, b = words[sel], bits[sel]
        for q in support[pos]:
            kernels.xor_scatter(plane, np.full(len(w), q, dtype=np.int64), w, b)


def _csr(raised: np.ndarray):
    """Row-major nonzeros of a ``(T, F)`` 0/1 matrix as CSR offsets and columns."""
    rows, cols = np.nonzero(raised)
    counts = np.bincount(rows, minlength=raised.shape[0])
    offsets = np.zeros(raised.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, cols


def _match(syndromes, raised, incidence, masks, etype, max_match):
    offsets, cols = _csr(raised)
    corr, size = kernels.match_batch(
        np.ascontiguousarray(syndromes, dtype=np.int64), offsets,
        np.ascontiguousarray(incidence[cols], dtype=np.int64),
        np.ascontiguousarray(masks[cols], dtype=np.int64), max_match,
    )
    fallback = size == 0
    if fallback.any():
        line = _DECODE[syndromes[fallback]]
        pos = np.where(line < 0, -1, line if etype == "X" else 3 * line)
        corr[fallback] = np.where(pos < 0, 0, np.left_shift(1, np.maximum(pos, 0)))
    return corr


def _line_corrections(s0, s1, s2):
    return (s0 & s2 & ~s1, s0 & s1 & ~s2, s1 & s2 & ~s0)


def _maj(a, b, c):
    return (a & b) | (b & c) | (a & c)


@dataclass
class BatchResult:
    failed: np.ndarray  # bool per trial
    by_check: dict  # (block, etype) -> bool per trial


def run_batch(prog: Program, faults: FaultBatch, n_trials: int, decoder: str,
              max_match: int = 3) -> BatchResult:
    """Simulate ``n_trials`` trials; ``faults`` carries every injected Pauli."""
    if decoder not in ("standard", "mpec"):
        raise ValueError(f"unknown decoder {decoder!r}")
    W = max(1, (n_trials + 63) // 64)
    X = np.zeros((prog.n_qubits, W), dtype=np.uint64)
    Z = np.zeros_like(X)
    F = np.zeros((prog.n_sites, W), dtype=np.uint64)
    O = np.zeros((prog.n_lines, W), dtype=np.uint64)

    # order faults by application time
    key = prog.loc_key[faults.loc]
    order = np.argsort(key, kind="stable")
    f_key = key[order]
    f_loc = faults.loc[order]
    f_code = faults.code[order]
    f_word = faults.trial[order] >> 6
    f_bit = ONE << (faults.trial[order] & 63).astype(np.uint64)
    q0 = prog.loc_q0[f_loc]
    q1 = prog.loc_q1[f_loc]

    def inject(k):
        lo, hi = np.searchsorted(f_key, [k, k + 1])
        if lo == hi:
            return
        code = f_code[lo:hi]
        for plane, sh, qs in ((X, 0, q0), (Z, 1, q0), (X, 2, q1), (Z, 3, q1)):
            sel = (code >> sh) & 1 == 1
            if sel.any():
                kernels.xor_scatter(plane, qs[lo:hi][sel], f_word[lo:hi][sel], f_bit[lo:hi][sel])

    for k, ctrl, tgt, ops in prog.steps:
        inject(k)  # measurement faults strike before the readout
        if len(ctrl):
            kernels.cnot_layer(X, Z, ctrl, tgt)
        inject(k + 1)
        for op in ops:
            if op[0] == "l1syn":
                _, etype, meas, corrections, sites = op
                plane = X if etype == "X" else Z
                m = plane[meas]  # (E, 3, 3, W)
                s = m[:, 0] ^ m[:, 1] ^ m[:, 2]
                s0, s1, s2 = s[:, 0], s[:, 1], s[:, 2]
                F[sites] = s0 | s1 | s2
                for j, c in enumerate(_line_corrections(s0, s1, s2)):
                    plane[corrections[:, j]] ^= c
            elif op[0] == "l1meas":
                _, etype, qubits, lines, sites = op
                m = (X if etype == "X" else Z)[qubits]  # (E, 9, W)
                if etype == "X":
                    p = [m[:, c] ^ m[:, 3 + c] ^ m[:, 6 + c] for c in range(3)]
                else:
                    p = [m[:, 3 * r] ^ m[:, 3 * r + 1] ^ m[:, 3 * r + 2] for r in range(3)]
                O[lines] = _maj(*p)
                F[sites] = (p[0] ^ p[1]) | (p[1] ^ p[2])
            else:
                for plan in op[1]:
                    _apply_l2(plan, X if plan.etype == "X" else Z, O, F, decoder, max_match)

    by_check = {}
    failed = np.zeros(W, dtype=np.uint64)
    for fp in prog.finals:
        plane = X if fp.etype == "X" else Z
        fail = _judge(fp, plane, F, decoder, prog.n_sites)
        by_check[(fp.block, fp.etype)] = fail
        failed |= fail
    unpack = lambda p: np.unpackbits(p.view(np.uint8), bitorder="little")[:n_trials].astype(bool)
    return BatchResult(unpack(failed), {k: unpack(v) for k, v in by_check.items()})


def _apply_l2(plan: L2Plan, plane, O, F, decoder, max_match) -> None:
    o = O[plan.anc]  # (3, 3, W)
    s = o[0] ^ o[1] ^ o[2]
    s0, s1, s2 = s[0], s[1], s[2]
    if decoder == "standard" or len(plan.sites) == 0:
        for j, c in enumerate(_line_corrections(s0, s1, s2)):
            for q in plan.support[line_position(plan.etype, j)]:
                plane[q] ^= c
        return
    trials = _bit_indices(s0 | s1 | s2)
    if len(trials) == 0:
        return
    bits = _gather(s, trials)
    syn = bits[0] | bits[1] << 1 | bits[2] << 2
    raised = _gather(F[plan.sites], trials).T
    corr = _match(syn, raised, plan.incidence, plan.masks, plan.etype, max_match)
    _scatter_positions(plane, plan.support, trials, corr)


def _judge(fp: FinalPlan, plane, F, decoder, n_sites):
    m = plane[fp.qubits]  # (9 pos, 9 qubits, W)
    if fp.etype == "X":
        p = [m[:, c] ^ m[:, 3 + c] ^ m[:, 6 + c] for c in range(3)]
    else:
        p = [m[:, 3 * r] ^ m[:, 3 * r + 1] ^ m[:, 3 * r + 2] for r in range(3)]
    L = _maj(*p)  # (9, W) logical error per position
    ideal_flag = (p[0] ^ p[1]) | (p[1] ^ p[2])
    groups = [[c, 3 + c, 6 + c] for c in range(3)] if fp.etype == "X" else \
             [[3 * r, 3 * r + 1, 3 * r + 2] for r in range(3)]
    Q = [L[g[0]] ^ L[g[1]] ^ L[g[2]] for g in groups]
    fail = _maj(*Q)
    if decoder == "standard":
        return fail
    s12, s23, s13 = Q[0] ^ Q[1], Q[1] ^ Q[2], Q[0] ^ Q[2]
    trials = _bit_indices(s12 | s23 | s13)
    if len(trials) == 0:
        return fail
    syn = (_gather(s12, trials) | _gather(s23, trials) << 1 | _gather(s13, trials) << 2)
    raised = np.concatenate([_gather(F[fp.sites], trials).T, _gather(ideal_flag, trials).T], axis=1)
    inc = np.concatenate([fp.incidence, [LINE_PATTERN[position_line(fp.etype, p)] for p in range(9)]])
    masks = np.concatenate([fp.masks, [1 << p for p in range(9)]])
    corr = _match(syn, raised, inc.astype(np.int64), masks.astype(np.int64), fp.etype, 3)
    lbits = _gather(L, trials)  # (9, T)
    for pos in range(9):
        lbits[pos] ^= (corr >> pos) & 1
    q = [lbits[g[0]] ^ lbits[g[1]] ^ lbits[g[2]] for g in groups]
    new_fail = (q[0] & q[1]) | (q[1] & q[2]) | (q[0] & q[2])
    out = fail.copy()
    words = trials >> 6
    bitv = ONE << (trials & 63).astype(np.uint64)
    # rewrite the bits of the re-decoded trials
    np.bitwise_and.at(out, words, ~bitv)
    sel = new_fail == 1
    np.bitwise_or.at(out, words[sel], bitv[sel])
    return out
