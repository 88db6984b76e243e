"""Scheduled physical circuits for concatenated Bacon-Shor error correction.

Grid convention for a 3x3 block (qubit index ``3 * row + col``):

* X errors are detected by Z-basis ancillas measuring ZZ pairs along each
  row; the binary sum over rows gives three bits ``(s12, s23, s13)`` that
  compare *columns*.  A column is the "line" for X errors.
* Z errors are handled by the conjugate circuit acting on columns and
  comparing *rows*.

The same structure is repeated one level up, with level-1 blocks ("lines")
in place of physical qubits.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, asdict
from functools import cached_property
from typing import Optional, Union

BUILDER_VERSION = "1.0"
REFERENCE_LOCATION_COUNT = 72657

KINDS = ("PrepZ", "PrepX", "MeasZ", "MeasX", "CNOT", "Memory")
SECTIONS = ("leading", "gadget", "trailing")

# Ancilla pair k compares grid positions PAIRS[k]; syndrome bit k is s12, s23, s13.
PAIRS = ((0, 1), (1, 2), (0, 2))
# Which position each ancilla pair couples to in the first and second CNOT layer.
FIRST_LAYER = (0, 1, 2)
SECOND_LAYER = (1, 2, 0)
# Syndrome (packed s12 | s23 << 1 | s13 << 2) caused by an error on line j.
LINE_PATTERN = (0b101, 0b011, 0b110)


@dataclass(frozen=True)
class Location:
    index: int
    kind: str
    qubits: tuple
    timestep: int
    level: int
    block: Optional[str] = None
    line: Optional[int] = None
    pair: Optional[int] = None
    section: Optional[str] = None


@dataclass(frozen=True)
class Line:
    """A level-1 qubit: nine physical qubits laid out on the 3x3 grid.

    ``pos`` is ``(row, col)`` for data, ``(row, pair)`` for X-syndrome
    ancillas and ``(col, pair)`` for Z-syndrome ancillas.
    """

    id: int
    block: Optional[str]
    role: str
    pos: tuple
    box: Optional[int]
    qubits: tuple


@dataclass(frozen=True)
class L1Syndrome:
    """One half of a level-1 EC block; decoded right after its measurements.

    ``meas[g][k]`` is the ancilla for pair ``k`` in parallel group ``g``
    (a row for X extraction, a column for Z).  ``corrections[j]`` is the
    physical qubit flipped to correct line ``j``.
    """

    site: int
    etype: str
    timestep: int
    line: Optional[int]
    meas: tuple
    corrections: tuple
    section: Optional[str]


@dataclass(frozen=True)
class L1Measure:
    """Transversal readout of a level-1 qubit with classical majority decoding."""

    site: int
    etype: str
    timestep: int
    line: int
    qubits: tuple
    section: Optional[str]


@dataclass(frozen=True)
class L2Gate:
    """Level-1 gadget seen from level 2; drives flag propagation."""

    kind: str
    timestep: int
    lines: tuple
    section: Optional[str]


@dataclass(frozen=True)
class L2Syndrome:
    index: int
    etype: str
    block: str
    timestep: int
    ancillas: tuple
    data: tuple
    section: Optional[str]


Event = Union[L1Syndrome, L1Measure, L2Gate, L2Syndrome]


@dataclass(frozen=True)
class GridConvention:
    rows: int = 3
    cols: int = 3
    x_line_axis: str = "column"
    z_line_axis: str = "row"


GRID = GridConvention()


def x_logical_support(qubits: tuple) -> tuple:
    """Representative logical X of a 3x3 block: one full row."""
    return tuple(qubits[0:3])


def z_logical_support(qubits: tuple) -> tuple:
    """Representative logical Z: one full column."""
    return tuple(qubits[0::3])


@dataclass
class Circuit:
    locations: list
    qubit_count: int
    lines: list
    events: list
    outputs: dict
    name: str = ""
    decoder_mode: Optional[str] = None
    n_sites: int = 0

    @property
    def census(self) -> int:
        return len(self.locations)

    @cached_property
    def steps(self) -> list:
        """``[(timestep, locations, events), ...]`` in execution order."""
        by_t: dict = {}
        for loc in self.locations:
            by_t.setdefault(loc.timestep, ([], []))[0].append(loc)
        for ev in self.events:
            by_t.setdefault(ev.timestep, ([], []))[1].append(ev)
        return [(t, *by_t[t]) for t in sorted(by_t)]

    @cached_property
    def l2_syndromes(self) -> list:
        return [e for e in self.events if isinstance(e, L2Syndrome)]

    @cached_property
    def sites(self) -> list:
        """Flag-raising events indexed by site id."""
        out = [None] * self.n_sites
        for e in self.events:
            if isinstance(e, (L1Syndrome, L1Measure)):
                out[e.site] = e
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "builder_version": BUILDER_VERSION,
            "qubit_count": self.qubit_count,
            "census": location_census(self),
            "locations": [
                [l.kind, list(l.qubits), l.timestep, l.level, l.block, l.line, l.pair, l.section]
                for l in self.locations
            ],
            "lines": [asdict(l) for l in self.lines],
            "events": [{"type": type(e).__name__, **asdict(e)} for e in self.events],
            "outputs": self.outputs,
        }

    @cached_property
    def content_hash(self) -> str:
        """Git blob hash of the canonical JSON serialisation."""
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha1(b"blob %d\0" % len(blob) + blob).hexdigest()


def location_census(circuit: Circuit) -> dict:
    counts = Counter(loc.kind for loc in circuit.locations)
    out = {k: counts.get(k, 0) for k in KINDS}
    out["total"] = sum(out.values())
    return out


class _Builder:
    def __init__(self):
        self.locations: list = []
        self.lines: list = []
        self.events: list = []
        self.n_qubits = 0
        self.n_sites = 0

    def qubits(self, n: int) -> tuple:
        out = tuple(range(self.n_qubits, self.n_qubits + n))
        self.n_qubits += n
        return out

    def line(self, block, role, pos, box=None) -> Line:
        ln = Line(len(self.lines), block, role, pos, box, self.qubits(9))
        self.lines.append(ln)
        return ln

    def add(self, kind, qubits, t, level, **tags) -> None:
        self.locations.append(
            Location(len(self.locations), kind, tuple(qubits), t, level, **tags)
        )

    def site(self) -> int:
        self.n_sites += 1
        return self.n_sites - 1

    def ec_half(self, blocks, t, etype, section, block_of=None) -> int:
        """Append one syndrome-extraction half for every block in parallel.

        ``blocks`` is a list of ``(line_id, qubits)``; returns the next free
        timestep.
        """
        prep, meas = ("PrepZ", "MeasZ") if etype == "X" else ("PrepX", "MeasX")
        staged = []
        for line_id, data in blocks:
            anc = self.qubits(9)
            # group g is a row (X) or a column (Z); grid positions along it
            groups = [
                [data[3 * g + j] for j in range(3)] if etype == "X" else [data[3 * j + g] for j in range(3)]
                for g in range(3)
            ]
            staged.append((line_id, data, anc, groups))
        tags = lambda line_id, pair=None: dict(
            block=block_of(line_id) if block_of else None, line=line_id, pair=pair, section=section
        )
        for line_id, data, anc, _ in staged:
            for a_i, a in enumerate(anc):
                self.add(prep, [a], t, 1, **tags(line_id, a_i % 3))
            for q in data:
                self.add("Memory", [q], t, 1, **tags(line_id))
        for layer_i, layer in enumerate((FIRST_LAYER, SECOND_LAYER)):
            for line_id, data, anc, groups in staged:
                for g in range(3):
                    for k in range(3):
                        d = groups[g][layer[k]]
                        a = anc[3 * g + k]
                        pair = [d, a] if etype == "X" else [a, d]
                        self.add("CNOT", pair, t + 1 + layer_i, 1, **tags(line_id, k))
        for line_id, data, anc, _ in staged:
            for a_i, a in enumerate(anc):
                self.add(meas, [a], t + 3, 1, **tags(line_id, a_i % 3))
            for q in data:
                self.add("Memory", [q], t + 3, 1, **tags(line_id))
        for line_id, data, anc, groups in staged:
            if etype == "X":
                corrections = tuple(data[c] for c in range(3))  # row 0 of each column
            else:
                corrections = tuple(data[3 * r] for r in range(3))  # column 0 of each row
            self.events.append(
                L1Syndrome(
                    self.site(), etype, t + 3, line_id,
                    tuple(tuple(anc[3 * g + k] for k in range(3)) for g in range(3)),
                    corrections, section,
                )
            )
        return t + 4

    def ec(self, blocks, t, section, block_of=None) -> int:
        t = self.ec_half(blocks, t, "X", section, block_of)
        return self.ec_half(blocks, t, "Z", section, block_of)


def build_level1_ec(kind: str = "both") -> Circuit:
    """One level-1 EC block on a single 3x3 data block.

    ``kind`` is ``"X"`` (X-syndrome extraction only), ``"Z"`` or ``"both"``.
    """
    if kind not in ("X", "Z", "both"):
        raise ValueError(f"kind must be 'X', 'Z' or 'both', got {kind!r}")
    b = _Builder()
    data = b.line(None, "data", (0, 0))
    blocks = [(data.id, data.qubits)]
    t = 0
    for etype in ("X", "Z"):
        if kind in (etype, "both"):
            t = b.ec_half(blocks, t, etype, None)
    return Circuit(
        b.locations, b.n_qubits, b.lines, b.events, {"data": [data.id]},
        name=f"level1-ec-{kind}", n_sites=b.n_sites,
    )


def build_level2_cnot_exrec(decoder_mode: Optional[str] = None) -> Circuit:
    """Full physical circuit of a level-2 CNOT extended rectangle.

    Leading level-2 EC on blocks A and B, a transversal level-2 CNOT from A
    to B, then trailing level-2 EC.  Every level-1 gadget (preparation,
    CNOT, idle step) is followed by a level-1 EC block; level-1 readouts are
    decoded classically.  The circuit does not depend on ``decoder_mode``.
    """
    if decoder_mode not in (None, "standard", "mpec"):
        raise ValueError(f"unknown decoder mode {decoder_mode!r}")
    b = _Builder()
    data = {
        blk: [b.line(blk, "data", (r, c)) for r in range(3) for c in range(3)]
        for blk in ("A", "B")
    }
    block_of = lambda line_id: b.lines[line_id].block
    live = {blk: list(data[blk]) for blk in data}
    t = 0
    l2_index = 0

    def level1_step(t, section, gadgets):
        """One level-1 time step.

        ``gadgets`` maps line id -> ``("prep", basis) | ("cnot", target) |
        ("meas", basis)``; every other live line idles.  Returns next t.
        """
        nonlocal l2_index
        busy = set()
        ec_lines = []
        meas_lines = []
        for lid, g in gadgets.items():
            busy.add(lid)
            ln = b.lines[lid]
            if g[0] == "prep":
                for q in ln.qubits:
                    b.add("PrepZ" if g[1] == "Z" else "PrepX", [q], t, 2,
                          block=ln.block, line=lid, section=section)
                b.events.append(L2Gate("prep", t, (lid,), section))
                ec_lines.append(lid)
            elif g[0] == "cnot":
                tgt = b.lines[g[1]]
                busy.add(tgt.id)
                for qc, qt in zip(ln.qubits, tgt.qubits):
                    b.add("CNOT", [qc, qt], t, 2, block=ln.block, line=lid, section=section)
                b.events.append(L2Gate("cnot", t, (lid, tgt.id), section))
                ec_lines += [lid, tgt.id]
            elif g[0] == "meas":
                for q in ln.qubits:
                    b.add("MeasZ" if g[1] == "Z" else "MeasX", [q], t, 2,
                          block=ln.block, line=lid, section=section)
                meas_lines.append((lid, g[1]))
        for blk in live:
            for ln in live[blk]:
                if ln.id not in busy:
                    for q in ln.qubits:
                        b.add("Memory", [q], t, 2, block=blk, line=ln.id, section=section)
                    b.events.append(L2Gate("memory", t, (ln.id,), section))
                    ec_lines.append(ln.id)
        for lid, basis in meas_lines:
            ln = b.lines[lid]
            b.events.append(L1Measure(b.site(), "X" if basis == "Z" else "Z", t, lid, ln.qubits, section))
        return meas_lines, ec_lines

    def run_ec_after(t, section, ec_lines):
        order = sorted(ec_lines)
        return b.ec([(lid, b.lines[lid].qubits) for lid in order], t + 1, section, block_of)

    def level2_ec(t, section, box):
        nonlocal l2_index
        for etype in ("X", "Z"):
            basis = "Z" if etype == "X" else "X"
            role = "xanc" if etype == "X" else "zanc"
            anc = {
                blk: [[b.line(blk, role, (g, k), box) for k in range(3)] for g in range(3)]
                for blk in live
            }
            # preparation
            gadgets = {a.id: ("prep", basis) for blk in anc for row in anc[blk] for a in row}
            _, ec_lines = level1_step(t, section, gadgets)
            for blk in live:
                live[blk] += [a for row in anc[blk] for a in row]
            t = run_ec_after(t, section, ec_lines)
            # two CNOT layers
            for layer in (FIRST_LAYER, SECOND_LAYER):
                gadgets = {}
                for blk in anc:
                    for g in range(3):
                        for k in range(3):
                            pos = layer[k]
                            d = data[blk][3 * g + pos] if etype == "X" else data[blk][3 * pos + g]
                            a = anc[blk][g][k]
                            if etype == "X":
                                gadgets[d.id] = ("cnot", a.id)
                            else:
                                gadgets[a.id] = ("cnot", d.id)
                _, ec_lines = level1_step(t, section, gadgets)
                t = run_ec_after(t, section, ec_lines)
            # readout
            gadgets = {a.id: ("meas", basis) for blk in anc for row in anc[blk] for a in row}
            _, ec_lines = level1_step(t, section, gadgets)
            for blk in live:
                b.events.append(
                    L2Syndrome(
                        l2_index, etype, blk, t,
                        tuple(tuple(a.id for a in row) for row in anc[blk]),
                        tuple(d.id for d in data[blk]), section,
                    )
                )
                l2_index += 1
            for blk in anc:
                for row in anc[blk]:
                    for a in row:
                        b.events.append(L2Gate("meas", t, (a.id,), section))
            for blk in live:
                live[blk] = list(data[blk])
            t = run_ec_after(t, section, ec_lines)
        return t

    t = level2_ec(t, "leading", 0)
    gadgets = {a.id: ("cnot", bb.id) for a, bb in zip(data["A"], data["B"])}
    _, ec_lines = level1_step(t, "gadget", gadgets)
    t = run_ec_after(t, "gadget", ec_lines)
    t = level2_ec(t, "trailing", 1)

    # Events sharing a timestep keep builder order except that EC decodes,
    # which belong to the end of their timestep, come after level-2 events.
    circuit = Circuit(
        b.locations, b.n_qubits, b.lines, _order_events(b.events),
        {blk: [d.id for d in data[blk]] for blk in data},
        name="level2-cnot-exrec", decoder_mode=decoder_mode, n_sites=b.n_sites,
    )
    return circuit


def _order_events(events: list) -> list:
    rank = {L2Gate: 0, L1Syndrome: 1, L1Measure: 2, L2Syndrome: 3}

    def key(item):
        i, e = item
        r = rank[type(e)]
        if isinstance(e, L2Gate) and e.kind == "meas":
            r = 4
        return (e.timestep, r, i)

    return [e for _, e in sorted(enumerate(events), key=key)]


def weight_schedule(levels: int, scheme: str) -> list:
    """Minimum number of physical errors causing logical failure per level.

    ``"standard"`` doubles each level; ``"alternating-mp"`` alternates a
    flag-providing level (x2) with a flag-consuming level (x5/2).
    """
    if levels <= 0:
        raise ValueError("levels must be >= 1")
    if scheme not in ("alternating-mp", "standard"):
        raise ValueError(f"unknown scheme {scheme!r}")
    out = [1]
    for level in range(2, levels + 1):
        prev = out[-1]
        if scheme == "standard" or level % 2 == 0:
            out.append(2 * prev)
        else:
            out.append(prev * 5 // 2)
    return out
