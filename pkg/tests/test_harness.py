import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from mpec.circuit import build_level1_ec
from mpec.harness import (
    ConfigError,
    SimConfig,
    TallyResult,
    UndefinedRatioError,
    batch_rng,
    binomial_weights,
    combine_polynomial,
    estimate_point,
    estimate_rate,
    improvement_ratio,
    inject_errors,
    inject_fixed_weight,
    read_rate_table,
    run_sweep,
    sample_direct_batch,
    sample_fixed_batch,
    tallies_to_csv,
    truncation_for,
)

SMALL = build_level1_ec("both")


def test_inject_edges():
    rng = np.random.default_rng(0)
    assert inject_errors(SMALL, 0.0, rng) == []
    every = inject_errors(SMALL, 1.0, rng)
    assert [l for l, _ in every] == list(range(SMALL.census))
    assert all(len(op) == len(SMALL.locations[l].qubits) and set(op) != {"I"} for l, op in every)
    assert inject_fixed_weight(SMALL, 0, rng) == []
    four = inject_fixed_weight(SMALL, 4, rng)
    assert len({l for l, _ in four}) == 4
    with pytest.raises(ValueError):
        inject_fixed_weight(SMALL, SMALL.census + 1, rng)
    with pytest.raises(ValueError):
        inject_errors(SMALL, 1.5, rng)


def test_fixed_batch_rows_are_distinct():
    is_cnot = np.arange(50) % 3 == 0
    fb = sample_fixed_batch(is_cnot, 6, 2000, np.random.default_rng(1))
    locs = fb.loc.reshape(2000, 6)
    assert all(len(set(r)) == 6 for r in locs)
    codes = fb.code.reshape(2000, 6)
    assert (codes[is_cnot[locs]] <= 15).all() and (codes[~is_cnot[locs]] <= 3).all() and (codes >= 1).all()


def test_sampling_is_uniform():
    is_cnot = np.zeros(20, dtype=bool)
    is_cnot[:10] = True
    fb = sample_fixed_batch(is_cnot, 3, 30000, np.random.default_rng(2))
    assert chisquare(np.bincount(fb.loc, minlength=20)).pvalue > 1e-4
    cn = fb.code[is_cnot[fb.loc]]
    assert chisquare(np.bincount(cn, minlength=16)[1:]).pvalue > 1e-4
    single = fb.code[~is_cnot[fb.loc]]
    assert chisquare(np.bincount(single, minlength=4)[1:]).pvalue > 1e-4


def test_direct_counts_are_binomial():
    n_loc, p, n = 400, 0.01, 20000
    fb = sample_direct_batch(np.zeros(n_loc, dtype=bool), p, n, np.random.default_rng(3))
    counts = np.bincount(fb.trial, minlength=n)
    mean, var = n_loc * p, n_loc * p * (1 - p)
    assert abs(counts.mean() - mean) < 5 * math.sqrt(var / n)
    for t in range(200):  # distinct within each trial
        row = fb.loc[fb.trial == t]
        assert len(np.unique(row)) == len(row)


def test_batch_streams_are_independent_of_decoder_and_batch_count():
    a = batch_rng(7, "fixed", 4, 0).integers(0, 2**32, 4)
    b = batch_rng(7, "fixed", 4, 0).integers(0, 2**32, 4)
    c = batch_rng(7, "fixed", 4, 1).integers(0, 2**32, 4)
    d = batch_rng(7, "fixed", 5, 0).integers(0, 2**32, 4)
    assert (a == b).all() and not (a == c).all() and not (a == d).all()


def mp_polynomial(r, N, p):
    with mpmath.workdps(50):
        p = mpmath.mpf(p)
        return float(sum(mpmath.binomial(N, i) * p**i * (1 - p) ** (N - i) * ri for i, ri in r.items()))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=13, max_size=13), st.floats(1e-7, 5e-4))
def test_polynomial_matches_mpmath(rates, p):
    r = dict(enumerate(rates))
    got = combine_polynomial(r, 60345, p).p2
    want = mp_polynomial(r, 60345, p)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-300)


def test_polynomial_edges():
    assert combine_polynomial({i: 0.0 for i in range(13)}, 60345, 1e-4).p2 == 0.0
    full = combine_polynomial({i: 1.0 for i in range(21)}, 20, 0.3, truncation=20)
    assert full.p2 == pytest.approx(1.0, abs=1e-12)
    assert binomial_weights(20, 0.0, 3).tolist() == [1.0, 0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        combine_polynomial({i: 0.0 for i in range(13)}, 100, 1.2)
    with pytest.raises(KeyError):
        combine_polynomial({0: 0.0}, 100, 0.01)


def test_polynomial_band():
    r = {i: (0.0, 0.0) for i in range(13)}
    r[4] = (1e-6, 5e-7)
    pt = combine_polynomial(r, 1000, 1e-3)
    w4 = binomial_weights(1000, 1e-3, 4)[4]
    assert pt.p2 == pytest.approx(w4 * 1e-6)
    assert pt.lower == pytest.approx(0.0, abs=1e-30) and pt.upper == pytest.approx(w4 * 2e-6)


def test_truncation_for():
    t = truncation_for(60345, 1e-3)
    with mpmath.workdps(30):
        tail = 1 - sum(mpmath.binomial(60345, i) * mpmath.mpf(1e-3) ** i * (1 - mpmath.mpf(1e-3)) ** (60345 - i)
                       for i in range(t + 1))
    assert tail < 1e-9
    assert truncation_for(60345, 0.0) == 0


def test_improvement_ratio():
    N, p = 60345, 1e-7
    r_std = {i: (0.0 if i < 4 else min(1.0, 1e-7 * 10 ** (i - 4))) for i in range(13)}
    r_mp = {i: (0.0 if i < 5 else min(1.0, 1e-8 * 10 ** (i - 5))) for i in range(13)}
    res = improvement_ratio(r_std, r_mp, N, p)
    assert res.formula == pytest.approx(1e-7 / 1e-8 * 5 / (N * p))
    assert res.full == pytest.approx(res.formula, rel=0.05)
    same = improvement_ratio(r_mp, r_mp, N, p)
    assert same.full == pytest.approx(1.0)
    with pytest.raises(UndefinedRatioError):
        improvement_ratio(r_std, {i: 0.0 for i in range(13)}, N, p)
    with pytest.raises(ValueError):
        improvement_ratio(r_std, r_mp, N, p, truncation=4)


def test_tally_statistics():
    t = TallyResult("fixed", "mpec", 5, 1000, 10, 100)
    assert t.rate == 0.01 and t.sigma == pytest.approx(math.sqrt(0.01 * 0.99 / 1000))
    assert t.interval() == pytest.approx((0.01 - 2 * t.sigma, 0.01 + 2 * t.sigma))
    zero = TallyResult("fixed", "mpec", 5, 96, 0, 100)
    assert zero.interval() == (0.0, 4 / 100)
    merged = t.merge(TallyResult("fixed", "mpec", 5, 1000, 0, 100))
    assert (merged.trials, merged.failures) == (2000, 10)


@pytest.mark.parametrize("bad", [
    {"trials": 0}, {"p": 1.5}, {"mode": "weird"}, {"decoder": "magic"},
    {"i_range": [4, 14]}, {"weight": -1}, {"bogus": 1}, {"trials": "many"},
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        SimConfig.from_dict(bad)


def test_zero_weight_rate_is_exactly_zero():
    res = estimate_rate(SimConfig(mode="fixed", weight=0, trials=500, decoder="standard"))
    assert res.failures == 0 and res.rate == 0.0


@pytest.mark.slow
def test_results_do_not_depend_on_workers():
    one = estimate_point("direct", 4e-4, ("standard", "mpec"), 4000, 11, batch_size=1024, workers=1)
    two = estimate_point("direct", 4e-4, ("standard", "mpec"), 4000, 11, batch_size=1024, workers=2)
    assert one == two
    assert one[0].failures > 0  # the check is not vacuous


def test_csv_round_trip():
    rows = run_sweep(SimConfig(mode="fixed", i_range=(0, 2), trials=200, decoders=("standard", "mpec")))
    text = tallies_to_csv(rows)
    assert text.splitlines()[0] == "mode,decoder,p_or_i,trials,failures,rate,sigma"
    table = read_rate_table(text)
    assert set(table) == {"standard", "mpec"} and set(table["mpec"]) == {0, 1, 2}
