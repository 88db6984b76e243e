"""Fault-tolerance checks at the level of level-1 outcomes.

The abstract model is one row of a level-2 X-syndrome extraction: data
lines ``d0, d1, d2`` (one per column line) and ancillas ``a0, a1, a2`` for
the pairs (0,1), (1,2), (0,2).  Parallel rows only add their syndrome bits
and two X errors in one column are a gauge operator, so one row carries the
whole X-error state.  Every level-1 location ends in one of the outcomes
US, FS, FF, UF of :class:`BlockOutcome`.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from typing import Optional

from .circuit import FIRST_LAYER, LINE_PATTERN, SECOND_LAYER
from .flags import FlagId
from .level1 import BlockOutcome, majority, syndrome_of_lines
from .mpec import SuperSyndrome, decision_trace, find_flag_match, standard_corrections

US, FS, FF, UF = BlockOutcome.US, BlockOutcome.FS, BlockOutcome.FF, BlockOutcome.UF
OUTCOMES = (US, FS, FF, UF)
DATA = (0, 1, 2)
ANC = (3, 4, 5)

# (name, kind, qubits) in time order; CNOTs list (control, target)
LOCATIONS = (
    [(f"prep a{k}", "prep", (3 + k,)) for k in range(3)]
    + [(f"mem d{j} t1", "mem", (j,)) for j in range(3)]
    + [(f"cnot d{FIRST_LAYER[k]}-a{k}", "cnot", (FIRST_LAYER[k], 3 + k)) for k in range(3)]
    + [(f"cnot d{SECOND_LAYER[k]}-a{k}", "cnot", (SECOND_LAYER[k], 3 + k)) for k in range(3)]
    + [(f"meas a{k}", "meas", (3 + k,)) for k in range(3)]
    + [(f"mem d{j} t4", "mem", (j,)) for j in range(3)]
)
_STAGE = [0] * 6 + [1] * 3 + [2] * 3 + [3] * 3 + [4] * 3


def _options(kind: str) -> list:
    """``(budget, outcomes)`` choices for one location, smallest budget only."""
    if kind == "cnot":
        out = []
        for pair in product(OUTCOMES, repeat=2):
            if pair != (US, US):
                out.append((max(o.weight for o in pair), pair))
        return out
    return [(o.weight, (o,)) for o in (FS, FF, UF)]


OPTIONS = [_options(kind) for _, kind, _ in LOCATIONS]


@dataclass
class RowState:
    err: list
    flags: list  # list of sets of FlagId

    @classmethod
    def clean(cls) -> "RowState":
        return cls([0] * 6, [set() for _ in range(6)])

    def copy(self) -> "RowState":
        return RowState(list(self.err), [set(f) for f in self.flags])


@dataclass
class BoxResult:
    c: int
    logical_failure: bool
    out: RowState
    trace: dict


def state_weight(state: RowState, lines=DATA) -> int:
    """Weight of the error/flag content of ``lines`` in outcome units."""
    w = 0
    for q in lines:
        n = len(state.flags[q])
        if state.err[q]:
            w += 2 + (n - 1) if n else 3
        else:
            w += n
    return w


class _Ids:
    def __init__(self, start: int = 0):
        self.next = start

    def new(self) -> FlagId:
        self.next += 1
        return FlagId(self.next - 1, "X")


def _hit(state: RowState, q: int, outcome: BlockOutcome, ids: _Ids) -> None:
    if outcome.failed:
        state.err[q] ^= 1
    if outcome.flagged:
        state.flags[q].add(ids.new())


def apply_incoming(events, ids: Optional[_Ids] = None, state: Optional[RowState] = None) -> RowState:
    """Data state after incoming ``(line, outcome)`` events."""
    ids = ids or _Ids()
    state = state or RowState.clean()
    for line, outcome in events:
        _hit(state, line, outcome, ids)
    return state


def ideal_failure(state: RowState, decoder: str) -> bool:
    """Noiseless EC of the same scheme on the data lines; True on logical failure."""
    err = [state.err[j] for j in DATA]
    s = syndrome_of_lines(err)
    if s == 0:
        return bool(majority(err))
    if decoder == "standard":
        corr = standard_corrections("X", s)
    else:
        carriers: dict = {}
        for j in DATA:
            for f in state.flags[j]:
                carriers.setdefault(f, []).append(j)
        inc = {}
        for f, lines in carriers.items():
            v = 0
            for j in lines:
                v ^= LINE_PATTERN[j]
            inc[f] = v
        ss = SuperSyndrome("X", s, inc, {f: tuple(v) for f, v in carriers.items()})
        corr = find_flag_match(ss).corrections
    for j in corr:
        err[j] ^= 1
    return bool(majority(err))


def run_box(state: RowState, internal: dict, decoder: str = "mpec", ids: Optional[_Ids] = None,
            max_match: int = 3) -> BoxResult:
    """One level-2 X extraction on ``state`` (data lines) with internal events.

    ``internal`` maps location index -> tuple of outcomes (one per qubit).
    """
    st = state.copy()
    for a in ANC:
        st.err[a] = 0
        st.flags[a] = set()
    ids = ids or _Ids(1 + max((f.id for fl in st.flags for f in fl), default=-1))

    def events(stage):
        for i, (_, kind, qubits) in enumerate(LOCATIONS):
            if _STAGE[i] == stage and i in internal:
                for q, o in zip(qubits, internal[i]):
                    _hit(st, q, o, ids)

    events(0)
    for stage in (1, 2):
        for i, (_, kind, qubits) in enumerate(LOCATIONS):
            if _STAGE[i] == stage:
                c, t = qubits
                st.err[t] ^= st.err[c]
                st.flags[t] |= st.flags[c]
        events(stage)
    events(3)  # measurement outcomes strike before the decode

    s = sum(st.err[3 + k] << k for k in range(3))
    inc: dict = {}
    for k in range(3):
        for f in st.flags[3 + k]:
            inc[f] = inc.get(f, 0) ^ (1 << k)
    data_flags = {f: tuple(j for j in DATA if f in st.flags[j]) for f in inc}
    ss = SuperSyndrome("X", s, inc, data_flags)
    if decoder == "standard":
        corr = standard_corrections("X", s)
        trace = {"syndrome": s, "corrections": sorted(corr), "decoder": "standard"}
    else:
        match = find_flag_match(ss, max_size=max_match)
        corr = match.corrections
        trace = {
            "syndrome": s,
            "flags": {str(f.id): v for f, v in sorted(inc.items())},
            "matched": [f.id for f in match.matched] if match.matched else None,
            "fallback": match.used_fallback,
            "corrections": sorted(corr),
            "decoder": "mpec",
        }
        for j in DATA:
            st.flags[j] -= set(inc)
    for j in corr:
        st.err[j] ^= 1
    events(4)
    out = RowState([st.err[j] for j in DATA] + [0, 0, 0],
                   [set(st.flags[j]) for j in DATA] + [set(), set(), set()])
    return BoxResult(state_weight(out), ideal_failure(out, decoder), out, trace)


# ---------------------------------------------------------------- enumeration


def incoming_configs(a: int) -> list:
    """All multisets of incoming data events of total weight ``a``."""
    events = [(j, o) for j in DATA for o in (FS, FF, UF)]
    out = []
    for n in range(0, a + 1):
        for combo in combinations_with_replacement(events, n):
            if sum(o.weight for _, o in combo) == a:
                out.append(combo)
    return out


def internal_configs(b: int) -> list:
    """All internal event maps of total budget exactly ``b``."""
    out = []

    def rec(i, left, acc):
        if i == len(LOCATIONS):
            if left == 0:
                out.append(dict(acc))
            return
        rec(i + 1, left, acc)
        for k, outcomes in OPTIONS[i]:
            if k <= left:
                acc[i] = outcomes
                rec(i + 1, left - k, acc)
                del acc[i]

    rec(0, b, {})
    return out


def _describe_internal(internal: dict) -> list:
    return [[LOCATIONS[i][0], [o.name for o in internal[i]]] for i in sorted(internal)]


def _describe_incoming(events) -> list:
    return [[j, o.name] for j, o in events]


@dataclass
class BoxReport:
    max_total_weight: int
    cases: int = 0
    n_violations: int = 0
    violations: list = field(default_factory=list)
    by_weight: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def to_json(self) -> str:
        return json.dumps({
            "max_total_weight": self.max_total_weight,
            "cases": self.cases,
            "by_weight": {f"{a},{b}": n for (a, b), n in sorted(self.by_weight.items())},
            "n_violations": self.n_violations,
            "violations": self.violations,
        }, indent=1)

    def summary(self) -> str:
        return (f"{self.cases} box cases with a + b <= {self.max_total_weight}: "
                f"{self.n_violations} violation(s) of c <= b")


def enumerate_box_cases(max_total_weight: int = 4, decoder: str = "mpec", max_match: int = 3,
                        limit_violations: int = 50) -> BoxReport:
    """Check ``c <= b`` (and no logical failure) for every case with ``a + b <= max``."""
    report = BoxReport(max_total_weight)
    internals = {b: internal_configs(b) for b in range(max_total_weight + 1)}
    for a in range(max_total_weight + 1):
        incoming = incoming_configs(a)
        for b in range(max_total_weight - a + 1):
            n = 0
            for inc_ev in incoming:
                start = apply_incoming(inc_ev)
                for internal in internals[b]:
                    res = run_box(start, internal, decoder, max_match=max_match)
                    n += 1
                    if res.c > b or res.logical_failure:
                        report.n_violations += 1
                        if len(report.violations) < limit_violations:
                            report.violations.append({
                                "a": a, "b": b, "c": res.c,
                                "logical_failure": res.logical_failure,
                                "incoming": _describe_incoming(inc_ev),
                                "internal": _describe_internal(internal),
                                "trace": res.trace,
                            })
            report.by_weight[(a, b)] = n
            report.cases += n
    return report


def weight5_failures(decoder: str = "mpec") -> list:
    """Incoming-only weight-5 configurations that fail under ``decoder``.

    Each entry records the incoming outcomes and whether the other decoder
    survives the same configuration.
    """
    other = "standard" if decoder == "mpec" else "mpec"
    out = []
    for inc_ev in incoming_configs(5):
        start = apply_incoming(inc_ev)
        res = run_box(start, {}, decoder)
        if res.logical_failure or res.c > 0:
            alt = run_box(start, {}, other)
            out.append({
                "incoming": _describe_incoming(inc_ev),
                "pattern": sorted(o.name for _, o in inc_ev),
                "lines": sorted({j for j, _ in inc_ev}),
                "logical_failure": res.logical_failure,
                f"{other}_fails": alt.logical_failure,
                "trace": res.trace,
            })
    return out


# -------------------------------------------------------------------- chain


@dataclass
class ChainResult:
    ok: bool
    premise_violation: bool
    failed_box: Optional[int] = None
    weights: list = field(default_factory=list)  # (a_n, b_n, c_n)
    reason: str = ""


def _random_internal(b: int, rng: random.Random) -> dict:
    """Random internal events with total budget exactly ``b``."""
    internal: dict = {}
    left = b
    free = list(range(len(LOCATIONS)))
    while left > 0 and free:
        i = free.pop(rng.randrange(len(free)))
        choices = [(k, o) for k, o in OPTIONS[i] if k <= left]
        if not choices:
            continue
        k, o = rng.choice(choices)
        internal[i] = o
        left -= k
    return internal


def chain_success_check(schedule, rng: Optional[random.Random] = None, internals=None,
                        decoder: str = "mpec") -> ChainResult:
    """Run ``len(schedule)`` boxes back to back with identity gadgets.

    ``schedule[n]`` is the budget ``b_n``; events are drawn from ``rng``
    unless explicit ``internals`` are given.  The premise is
    ``b_n + b_{n+1} <= 4``; schedules that break it are reported as such.
    """
    for n in range(len(schedule) - 1):
        if schedule[n] + schedule[n + 1] > 4:
            return ChainResult(False, True, n, reason=f"b_{n} + b_{n + 1} > 4")
    if any(b > 4 for b in schedule):
        return ChainResult(False, True, reason="b_n > 4")
    rng = rng or random.Random(0)
    state = RowState.clean()
    ids = _Ids()
    result = ChainResult(True, False)
    for n, b in enumerate(schedule):
        internal = internals[n] if internals is not None else _random_internal(b, rng)
        a = state_weight(state)
        if a + b > 4:
            return ChainResult(False, False, n, result.weights, f"a_{n} + b_{n} = {a + b} > 4")
        res = run_box(state, internal, decoder, ids=ids)
        result.weights.append((a, b, res.c))
        if res.logical_failure:
            return ChainResult(False, False, n, result.weights, "logical failure")
        state = res.out
    return result


def adversarial_chain(schedule, decoder: str = "mpec") -> ChainResult:
    """Chain where every box spends its budget on the events leaving the most weight.

    Ties go to the first configuration in enumeration order.
    """
    pool = {b: internal_configs(b) for b in set(schedule)}
    state = RowState.clean()
    ids = _Ids()
    chosen = []
    for n, b in enumerate(schedule):
        worst = None
        for internal in pool[b]:
            res = run_box(state, internal, decoder, ids=_Ids(ids.next))
            key = (res.logical_failure, res.c)
            if worst is None or key > worst[0]:
                worst = (key, internal)
        chosen.append(worst[1])
        res = run_box(state, worst[1], decoder, ids=ids)
        state = res.out
    return chain_success_check(schedule, internals=chosen, decoder=decoder)


def random_schedule(M: int, rng: random.Random) -> list:
    out = []
    prev = 0
    for _ in range(M):
        b = rng.randint(0, 4 - prev)
        out.append(b)
        prev = b
    return out


# ------------------------------------------------------------- golden cases

# Abstract description of each golden case: incoming events, internal
# events and the verdict per decoder ("pass"/"fail").
_CNOT_A = {k: 6 + k for k in range(3)}  # first layer, ancilla k
_CNOT_B = {k: 9 + k for k in range(3)}  # second layer, ancilla k

GOLDEN = {
    "fig5": dict(incoming=[(0, FF), (1, FF), (2, FS)], internal={},
                 expect={"mpec": "fail", "standard": "fail"}),
    "fig6": dict(incoming=[(0, FS), (1, FS), (2, UF)], internal={},
                 expect={"mpec": "fail", "standard": "pass"}),
    "fig4_match3": dict(incoming=[(0, FF)], internal={_CNOT_A[1]: (FF, FF)},
                        expect={"mpec": "pass", "standard": "fail"}),
    "fig7": dict(incoming=[(0, FS)], internal={_CNOT_B[0]: (FF, UF)},
                 expect={"mpec": "pass", "standard": "pass"}),
    "fig8": dict(incoming=[], internal={_CNOT_A[0]: (FF, FF), _CNOT_A[1]: (FF, FF)},
                 expect={"mpec": "pass", "standard": "fail"}),
    "fs_only": dict(incoming=[(0, FS), (1, FS), (2, FS)],
                    internal={0: (FS,), _CNOT_A[2]: (FS, FS), 12: (FS,)},
                    expect={"mpec": "pass", "standard": "pass"}),
}


def abstract_verdict(case_id: str, decoder: str) -> str:
    case = GOLDEN[case_id]
    res = run_box(apply_incoming(case["incoming"]), case["internal"], decoder)
    return "fail" if res.logical_failure else "pass"


def golden_faults(circuit, case_id: str) -> list:
    """Physical faults realising a golden case in block B's trailing X extraction.

    Row 0 of block B is used: data lines at positions 0, 1, 2 are the
    abstract ``d0, d1, d2``, ancillas of group 0 are ``a0, a1, a2``.
    """
    from .circuit import L2Syndrome

    box = next(e for e in circuit.events if isinstance(e, L2Syndrome)
               and e.block == "B" and e.section == "trailing" and e.etype == "X")
    data = [circuit.lines[box.data[j]] for j in DATA]
    anc = [circuit.lines[box.ancillas[0][k]] for k in range(3)]
    loc_by = {}
    for loc in circuit.locations:
        if loc.level == 2 and loc.kind == "CNOT":
            loc_by[loc.qubits] = loc.index
        elif loc.level == 2 and loc.kind in ("MeasZ", "PrepZ"):
            loc_by[(loc.kind, loc.qubits[0])] = loc.index

    def gadget_cnot(line, col):
        # physical CNOT of the transversal A -> B gadget targeting this qubit
        return next(l.index for l in circuit.locations
                    if l.section == "gadget" and l.level == 2 and l.kind == "CNOT"
                    and l.qubits[1] == line.qubits[col])

    faults = []

    def incoming(j, outcome):
        cols = {FS: (0,), FF: (0, 1), UF: (0, 1, 2)}[outcome]
        for col in cols:
            faults.append((gadget_cnot(data[j], col), "IX"))

    def cnot_event(j, k, outcomes):
        # X on control qubits flips the data, on target qubits the ancilla
        cols_c = {US: (), FS: (0,), FF: (0, 1), UF: (0, 1, 2)}[outcomes[0]]
        cols_t = {US: (), FS: (0,), FF: (0, 1), UF: (0, 1, 2)}[outcomes[1]]
        for col in range(3):
            op = ("X" if col in cols_c else "I") + ("X" if col in cols_t else "I")
            if op != "II":
                faults.append((loc_by[(data[j].qubits[col], anc[k].qubits[col])], op))

    case = GOLDEN[case_id]
    for j, o in case["incoming"]:
        incoming(j, o)
    for i, outcomes in case["internal"].items():
        name, kind, qubits = LOCATIONS[i]
        if kind == "cnot":
            cnot_event(qubits[0], qubits[1] - 3, outcomes)
        elif kind == "prep":
            k = qubits[0] - 3
            n = {FS: 1, FF: 2, UF: 3}[outcomes[0]]
            for col in range(n):
                faults.append((loc_by[("PrepZ", anc[k].qubits[col])], "X"))
        elif kind == "meas":
            k = qubits[0] - 3
            n = {FS: 1, FF: 2, UF: 3}[outcomes[0]]
            for col in range(n):
                faults.append((loc_by[("MeasZ", anc[k].qubits[col])], "X"))
        else:
            raise NotImplementedError(f"no physical recipe for {name}")
    return faults


@dataclass
class GoldenResult:
    case_id: str
    expected: dict
    physical: dict
    abstract: dict
    traces: dict

    @property
    def ok(self) -> bool:
        return self.expected == self.physical == self.abstract


def replay_golden_case(case_id: str, circuit=None) -> GoldenResult:
    """Replay a golden case through the physical simulator and the abstract model."""
    from .circuit import build_level2_cnot_exrec
    from .reference import simulate_trial

    if case_id not in GOLDEN:
        raise KeyError(f"unknown case {case_id!r}; known: {sorted(GOLDEN)}")
    circuit = circuit or build_level2_cnot_exrec()
    faults = golden_faults(circuit, case_id)
    physical, traces = {}, {}
    for dec in ("standard", "mpec"):
        rec = simulate_trial(circuit, faults, dec, trace=True)
        physical[dec] = "pass" if rec.passed else "fail"
        traces[dec] = [d for d in rec.decisions if d["syndrome"] != [0, 0, 0]]
    abstract = {dec: abstract_verdict(case_id, dec) for dec in ("standard", "mpec")}
    return GoldenResult(case_id, dict(GOLDEN[case_id]["expect"]), physical, abstract, traces)
