from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpec.level1 import (
    BlockOutcome,
    block_line_parities,
    classify_outcome,
    decode_syndrome,
    enumerate_block_outcomes,
    ideal_block_decode,
    majority,
    pack_syndrome,
    syndrome_of_lines,
    unpack_syndrome,
)


def test_decode_examples():
    assert decode_syndrome((0, 0, 0)) is None
    assert decode_syndrome((1, 0, 1)) == 0
    assert decode_syndrome((1, 1, 0)) == 1
    assert decode_syndrome((0, 1, 1)) == 2
    assert decode_syndrome((1, 0, 0)) is None


def test_odd_syndromes_get_no_correction():
    for bits in product((0, 1), repeat=3):
        if sum(bits) % 2:
            assert decode_syndrome(bits) is None


@given(st.integers(0, 7))
def test_pack_round_trip(s):
    assert pack_syndrome(unpack_syndrome(s)) == s


@given(st.lists(st.integers(0, 1), min_size=3, max_size=3))
def test_decoding_restores_codeword_up_to_logical(errors):
    s = syndrome_of_lines(errors)
    assert sum(unpack_syndrome(s)) % 2 == 0
    line = decode_syndrome(s)
    left = list(errors)
    if line is not None:
        left[line] ^= 1
    # all-equal lines are a codeword: trivial or the logical operator
    assert len(set(left)) == 1
    assert left[0] == majority(errors)


def test_outcomes_and_weights():
    assert classify_outcome(False, False) is BlockOutcome.US
    assert classify_outcome(True, False) is BlockOutcome.FS
    assert classify_outcome(True, True) is BlockOutcome.FF
    assert classify_outcome(False, True) is BlockOutcome.UF
    assert [o.weight for o in (BlockOutcome.US, BlockOutcome.FS, BlockOutcome.FF, BlockOutcome.UF)] == [0, 1, 2, 3]


def test_line_parities_and_ideal_decode():
    x = [1, 0, 0, 1, 0, 0, 0, 0, 0]  # two X in column 0 cancel
    z = [0, 0, 0, 1, 1, 0, 0, 0, 0]  # two Z in row 1 cancel
    assert block_line_parities(x, z) == ((0, 0, 0), (0, 0, 0))
    assert ideal_block_decode((1, 1, 0)) == (syndrome_of_lines((1, 1, 0)), 1)
    assert ideal_block_decode((1, 0, 0)) == (0b101, 0)


@pytest.fixture(scope="module")
def outcomes():
    return enumerate_block_outcomes(max_faults=2)


@pytest.mark.slow
def test_single_faults_are_harmless(outcomes):
    counts, worst = outcomes
    assert worst <= 1
    assert not any(o.failed for (_, o) in counts[1])
    assert counts[1][("X", BlockOutcome.FS)] > 0 and counts[1][("Z", BlockOutcome.FS)] > 0


@pytest.mark.slow
def test_unflagged_failure_needs_three_faults(outcomes):
    counts, _ = outcomes
    assert counts[0] == {("X", BlockOutcome.US): 1, ("Z", BlockOutcome.US): 1}
    assert not any(o is BlockOutcome.UF for (_, o) in counts[2])
    assert any(o is BlockOutcome.FF for (_, o) in counts[2])
