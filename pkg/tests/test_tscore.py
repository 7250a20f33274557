import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from spurcheck.errors import DegenerateInputError, InputError
from spurcheck.series import TimeSeries
from spurcheck.tscore import (
    KendallResult,
    SeriesDiagnostics,
    kendall_tau,
    lag1_dependence,
    significance_rate,
    summarize_diagnostics,
    trend_correlation,
)


def pair_count_tau_b(x, y):
    """O(n^2) oracle straight from the definition."""
    x, y = [float(v) for v in x], [float(v) for v in y]
    n = len(x)
    c = d = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            a = (x[i] > x[j]) - (x[i] < x[j])
            b = (y[i] > y[j]) - (y[i] < y[j])
            if a == 0:
                tx += 1
            if b == 0:
                ty += 1
            if a * b > 0:
                c += 1
            elif a * b < 0:
                d += 1
    n0 = n * (n - 1) // 2
    return (c - d) / math.sqrt((n0 - tx) * (n0 - ty))


@pytest.mark.parametrize(
    "x, y, expected",
    [
        ([1, 2, 3, 4], [1, 2, 3, 4], 1.0),
        ([1, 2, 3, 4, 5], [3, 1, 2, 5, 4], 0.4),
        ([1, 2, 2, 3], [1, 2, 3, 3], 0.8),
        ([1, 2, 3, 4, 5], [5, 4, 3, 2, 1], -1.0),
    ],
)
def test_documented_examples(backend, x, y, expected):
    assert kendall_tau(x, y).tau == pytest.approx(expected, abs=1e-12)


def test_tau_b_matches_pair_counting_oracle(backend):
    rng = np.random.default_rng(20240601)
    for _ in range(1000):
        n = int(rng.integers(3, 51))
        # small integer support forces plenty of ties
        x = rng.integers(0, int(rng.integers(2, 12)), n).astype(float)
        y = rng.integers(0, int(rng.integers(2, 12)), n).astype(float)
        if len(set(x)) == 1 or len(set(y)) == 1:
            continue
        assert kendall_tau(x, y).tau == pytest.approx(pair_count_tau_b(x, y), abs=1e-12)


def _s_stat(x, y):
    return sum(
        np.sign(x[i] - x[j]) * np.sign(y[i] - y[j])
        for i in range(len(x))
        for j in range(i + 1, len(x))
    )


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8])
def test_exact_p_matches_permutation_enumeration(n):
    rng = np.random.default_rng(n)
    x = np.arange(n, dtype=float)
    null = np.array([_s_stat(x, np.array(p)) for p in itertools.permutations(range(n))])
    for _ in range(5):
        y = rng.permutation(n).astype(float)
        res = kendall_tau(x, y)
        assert res.method == "exact"
        s_obs = _s_stat(x, y)
        assert res.p_two_sided == pytest.approx(np.mean(np.abs(null) >= abs(s_obs)), abs=1e-12)


def test_zero_tau_exact_p_is_one():
    # S = 0 for this ordering of n = 4
    res = kendall_tau([1, 2, 3, 4], [2, 4, 1, 3])
    assert res.tau == 0.0
    assert res.p_two_sided == 1.0


def test_normal_approximation_agrees_with_scipy(backend):
    rng = np.random.default_rng(7)
    for n in (10, 25, 60, 201):
        x = rng.normal(size=n)
        y = 0.3 * x + rng.normal(size=n)
        ours = kendall_tau(x, y)
        ref = stats.kendalltau(x, y, method="asymptotic")
        assert ours.method == "normal_approx"
        assert ours.tau == pytest.approx(ref.statistic, abs=1e-12)
        assert ours.p_two_sided == pytest.approx(ref.pvalue, rel=1e-9)


def test_tied_normal_approximation_agrees_with_scipy():
    rng = np.random.default_rng(8)
    x = rng.integers(0, 5, 40)
    y = rng.integers(0, 4, 40)
    ours = kendall_tau(x, y)
    ref = stats.kendalltau(x, y, method="asymptotic")
    assert ours.tau == pytest.approx(ref.statistic, abs=1e-12)
    assert ours.p_two_sided == pytest.approx(ref.pvalue, rel=1e-9)
    assert ours.ties_x > 0 and ours.ties_y > 0


def test_errors():
    with pytest.raises(InputError):
        kendall_tau([1, 2, 3], [1, 2])
    with pytest.raises(DegenerateInputError):
        kendall_tau([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateInputError):
        kendall_tau([1, 2, 3], [4, 4, 4])
    with pytest.raises(InputError):
        kendall_tau([1, 2, np.nan], [1, 2, 3])


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=40))
def test_symmetry_and_monotone_invariance(pairs):
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    r = kendall_tau(x, y)
    assert -1.0 <= r.tau <= 1.0 and 0.0 <= r.p_two_sided <= 1.0
    assert kendall_tau(y, x).tau == pytest.approx(r.tau, abs=1e-12)
    # strictly increasing in floating point too (ties preserved exactly)
    warped = np.exp(stats.rankdata(x) / len(x))
    assert kendall_tau(warped, y).tau == pytest.approx(r.tau, abs=1e-12)
    assert kendall_tau(-x, y).tau == pytest.approx(-r.tau, abs=1e-12)


def _series(values, years=None):
    years = np.arange(1900, 1900 + len(values)) if years is None else years
    return TimeSeries("s", years, values)


def test_trend_and_lag_examples():
    up = _series(np.linspace(0.0, 5.0, 30) ** 2)
    assert trend_correlation(up) == 1.0
    assert lag1_dependence(up) == 1.0
    down = _series(np.arange(30, 0, -1.0))
    assert trend_correlation(down) == -1.0
    with pytest.raises(DegenerateInputError):
        trend_correlation(_series(np.ones(10)))


def test_lag_pairs_respect_gaps():
    # only 1900-1901 and 1950-1951 are consecutive: two lag pairs
    s = _series([1.0, 2.0, 10.0, 12.0], years=[1900, 1901, 1950, 1951])
    assert lag1_dependence(s) == 1.0
    gappy = _series([1.0, 2.0, 3.0], years=[1900, 1902, 1904])
    with pytest.raises(DegenerateInputError):
        lag1_dependence(gappy)


def test_white_noise_lag_dependence_median_near_zero():
    rng = np.random.default_rng(11)
    lags = [lag1_dependence(_series(rng.normal(size=201))) for _ in range(1000)]
    assert abs(np.median(lags)) < 0.03


def test_summaries():
    one = SeriesDiagnostics(-0.5, 0.7)
    s = summarize_diagnostics([one], "x")
    assert (s.abs_tau_Y_median, s.tau_L_median, s.count) == (0.5, 0.7, 1)
    s = summarize_diagnostics(
        [SeriesDiagnostics(-0.2, 0.1), SeriesDiagnostics(0.4, 0.3)], "y"
    )
    assert s.abs_tau_Y_median == pytest.approx(0.3)
    assert s.tau_L_median == pytest.approx(0.2)
    with pytest.raises(InputError):
        summarize_diagnostics([], "z")


def test_significance_rate_basic():
    res = [KendallResult(0.5, 0.001, 10, 0, 0, "normal_approx")] * 4
    assert significance_rate(res, 0.05) == 1.0
    assert significance_rate([0.2, 0.01], 0.05) == 0.5
    with pytest.raises(InputError):
        significance_rate([], 0.05)
    with pytest.raises(InputError):
        significance_rate([0.1], 1.5)


def test_significance_rate_null_within_binomial_band():
    rng = np.random.default_rng(12)
    k = 1000
    res = [kendall_tau(rng.normal(size=60), rng.normal(size=60)) for _ in range(k)]
    lo, hi = stats.binom.interval(0.99, k, 0.05)
    assert lo / k <= significance_rate(res, 0.05) <= hi / k
