from itertools import combinations

from hypothesis import given, settings
from hypothesis import strategies as st

from mpec.circuit import LINE_PATTERN
from mpec.flags import FlagId
from mpec.mpec import (
    SuperSyndrome,
    assemble_super_syndrome,
    decision_trace,
    decode_level2,
    find_flag_match,
    line_position,
    standard_corrections,
)

EMPTY = [[set(), set(), set()] for _ in range(3)]


def flag(i):
    return FlagId(i, "X")


def ss_from(syndrome, flags):
    """``flags``: list of (incidence, data positions)."""
    return SuperSyndrome("X", syndrome,
                         {flag(i): inc for i, (inc, _) in enumerate(flags)},
                         {flag(i): tuple(pos) for i, (_, pos) in enumerate(flags)})


def logical_after(errors_on_lines, corrections):
    left = list(errors_on_lines)
    for pos in corrections:
        left[pos % 3] ^= 1
    assert len(set(left)) == 1, "not a codeword"
    return left[0]


def test_assemble_empty():
    ss = assemble_super_syndrome("X", [[0, 0, 0]] * 3, EMPTY, {})
    assert ss.syndrome == 0 and not ss.ancilla_flags and not ss.data_flags


def test_assemble_single_ff_on_line():
    f = flag(7)
    # an X error on data column 0 flips pairs (1,2) and (1,3) in one group
    anc = [[{f}, set(), {f}], [set()] * 3, [set()] * 3]
    ss = assemble_super_syndrome("X", [[1, 0, 1], [0, 0, 0], [0, 0, 0]], anc, {0: {f}})
    assert ss.syndrome == LINE_PATTERN[0] == ss.ancilla_flags[f]
    assert ss.data_flags[f] == (0,)


def test_assemble_cancelling_copies():
    f = flag(1)
    anc = [[{f}, set(), set()], [{f}, set(), set()], [set()] * 3]
    ss = assemble_super_syndrome("X", [[0] * 3] * 3, anc, {})
    assert ss.ancilla_flags[f] == 0


def test_single_flag_match_corrects_line():
    ss = ss_from(LINE_PATTERN[1], [(LINE_PATTERN[1], [1])])
    m = find_flag_match(ss)
    assert m.matched == (flag(0),) and m.corrections == {1}
    assert logical_after([0, 1, 0], m.corrections) == 0


def test_two_ffs_both_corrected():
    ss = ss_from(LINE_PATTERN[0] ^ LINE_PATTERN[1], [(LINE_PATTERN[0], [0]), (LINE_PATTERN[1], [1])])
    d = decode_level2(ss, "mpec")
    assert logical_after([1, 1, 0], d.corrections) == 0
    # the flag-blind decoder flips the third line and fails
    assert logical_after([1, 1, 0], decode_level2(ss, "standard").corrections) == 1


def test_fs_single_match_beats_ff_pair():
    # two FFs (lines 0, 1) and an FS flag on line 2 whose incidence alone matches
    ss = ss_from(LINE_PATTERN[0] ^ LINE_PATTERN[1],
                 [(LINE_PATTERN[0], [0]), (LINE_PATTERN[1], [1]), (LINE_PATTERN[2], [2])])
    m = find_flag_match(ss)
    assert m.matched == (flag(2),)
    assert logical_after([1, 1, 0], m.corrections) == 1


def test_two_fs_match_a_uf_syndrome():
    # UF on line 2 gives the line-2 syndrome; FS flags on lines 0 and 1 add up to it
    ss = ss_from(LINE_PATTERN[2], [(LINE_PATTERN[0], [0]), (LINE_PATTERN[1], [1])])
    assert logical_after([0, 0, 1], decode_level2(ss, "mpec").corrections) == 1
    assert logical_after([0, 0, 1], decode_level2(ss, "standard").corrections) == 0


def test_parity_mismatch_falls_back():
    ss = ss_from(0b001, [(LINE_PATTERN[0], [0])])
    m = find_flag_match(ss)
    assert m.used_fallback and m.corrections == frozenset()
    d = decode_level2(ss, "mpec")
    assert d.cleared == {flag(0)}
    assert decision_trace(ss, d)["fallback"] is True


def test_three_flag_match():
    # no single flag or pair reproduces 0b101, all three together do
    ss = ss_from(0b101, [(0b001, [0]), (0b010, []), (0b110, [3])])
    m = find_flag_match(ss, collect=True)
    assert len(m.matched) == 3 and m.corrections == {0, 3}
    assert find_flag_match(ss, max_size=2).used_fallback


def test_no_flags_same_as_standard():
    for s in range(8):
        ss = ss_from(s, [])
        assert decode_level2(ss, "mpec").corrections == decode_level2(ss, "standard").corrections
        assert standard_corrections("Z", s) == {line_position("Z", l) for l in [0, 1, 2] if LINE_PATTERN[l] == s}


flag_lists = st.lists(st.tuples(st.integers(0, 7), st.lists(st.integers(0, 8), max_size=3, unique=True)), max_size=6)


def oracle(ss, max_size=3):
    """Brute force over all subsets: smallest size, then fewest corrections."""
    flags = sorted(f for f, inc in ss.ancilla_flags.items() if inc)
    for size in range(1, max_size + 1):
        hits = []
        for combo in combinations(flags, size):
            acc = 0
            corr = set()
            for f in combo:
                acc ^= ss.ancilla_flags[f]
                corr ^= set(ss.data_flags[f])
            if acc == ss.syndrome:
                hits.append((len(corr), combo))
        if hits:
            return min(hits)
    return None


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 7), flag_lists)
def test_match_is_minimal_and_valid(s, flags):
    ss = ss_from(s, flags)
    m = find_flag_match(ss)
    best = oracle(ss)
    if best is None:
        assert m.used_fallback and m.corrections == standard_corrections("X", s)
        return
    acc = 0
    for f in m.matched:
        acc ^= ss.ancilla_flags[f]
    assert acc == s
    assert (len(m.corrections), m.matched) == best
    assert find_flag_match(ss) == m  # deterministic
