import json

import numpy as np
import pytest
from scipy import stats

from spurcheck.dynreg import (
    ArimaOrder,
    arma_loglik,
    auto_arima,
    coef_test,
    difference,
    fit_arima,
    kpss_rejects,
    kpss_stat,
    trace_jsonl,
)
from spurcheck.dynreg.arima import (
    coefs_to_pacf,
    pacf_to_coefs,
    transform,
    untransform,
    z_test,
)
from spurcheck.dynreg.kpss import CRITICAL_5PCT, bartlett_lags
from spurcheck.errors import DegenerateInputError, InputError


def simulate_arma(rng, n, ar=(), ma=(), burn=200):
    ar, ma = np.asarray(ar, float), np.asarray(ma, float)
    e = rng.normal(size=n + burn)
    x = np.zeros(n + burn)
    for t in range(n + burn):
        x[t] = e[t]
        for i, a in enumerate(ar):
            if t - i - 1 >= 0:
                x[t] += a * x[t - i - 1]
        for j, b in enumerate(ma):
            if t - j - 1 >= 0:
                x[t] += b * e[t - j - 1]
    return x[burn:]


# -- differencing -----------------------------------------------------------

def test_difference_examples():
    assert difference([1, 2, 3, 4], 1).tolist() == [1, 1, 1]
    assert difference([1.5, 2.0], 0).tolist() == [1.5, 2.0]
    assert difference([1, 4, 9, 16], 2).tolist() == [2, 2]
    with pytest.raises(InputError):
        difference([1, 2], 2)


# -- KPSS -------------------------------------------------------------------

def test_kpss_matches_statsmodels():
    from statsmodels.tsa.stattools import kpss

    rng = np.random.default_rng(0)
    for trend, reg in (("level", "c"), ("trend", "ct")):
        x = np.cumsum(rng.normal(size=150)) * 0.1 + rng.normal(size=150)
        ref = kpss(x, regression=reg, nlags=bartlett_lags(150))[0]
        assert kpss_stat(x, trend) == pytest.approx(ref, rel=1e-10)


def test_kpss_power_on_random_walks():
    rng = np.random.default_rng(1)
    rejections = [kpss_rejects(np.cumsum(rng.normal(size=200))) for _ in range(500)]
    assert np.mean(rejections) >= 0.95


def test_kpss_size_on_white_noise():
    rng = np.random.default_rng(2)
    stats_ = [kpss_stat(rng.normal(size=200)) for _ in range(500)]
    assert np.mean(np.array(stats_) < CRITICAL_5PCT["level"]) >= 0.90


def test_kpss_trend_spec_removes_linear_trend():
    rng = np.random.default_rng(3)
    x = 0.05 * np.arange(200) + rng.normal(size=200)
    assert kpss_stat(x, "trend") < CRITICAL_5PCT["trend"]
    assert kpss_stat(x, "level") > CRITICAL_5PCT["level"]


def test_kpss_errors():
    with pytest.raises(DegenerateInputError):
        kpss_stat(np.full(30, 2.0))
    with pytest.raises(InputError):
        kpss_stat(np.arange(5.0))


# -- parameter transform ------------------------------------------------------

def test_transform_roundtrip_and_stationarity():
    rng = np.random.default_rng(4)
    for _ in range(200):
        p, q = rng.integers(0, 6, size=2)
        u = rng.uniform(-3.0, 3.0, size=p + q)
        ar, ma = transform(u, p, q)
        np.testing.assert_allclose(untransform(ar, ma), u, atol=1e-8)
        if p:
            assert np.all(np.abs(np.roots(np.r_[-ar[::-1], 1.0])) > 1.0)
        if q:
            assert np.all(np.abs(np.roots(np.r_[ma[::-1], 1.0])) > 1.0)


def test_pacf_roundtrip_known_ar2():
    phi = np.array([0.5, 0.3])
    np.testing.assert_allclose(pacf_to_coefs(coefs_to_pacf(phi)), phi)
    with pytest.raises(ValueError):
        coefs_to_pacf([1.2])


# -- likelihood oracle ------------------------------------------------------

def arma_acov(ar, ma, lags, terms=4000):
    psi = np.zeros(terms)
    psi[0] = 1.0
    for j in range(1, terms):
        v = ma[j - 1] if j - 1 < len(ma) else 0.0
        for i, a in enumerate(ar):
            if j - i - 1 >= 0:
                v += a * psi[j - i - 1]
        psi[j] = v
    return np.array([psi[: terms - h] @ psi[h:] for h in range(lags)])


def test_filter_loglik_matches_dense_gaussian(backend):
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(3, 21))
        p, q = (int(v) for v in rng.integers(0, 3, size=2))
        ar, ma = transform(rng.uniform(-1.5, 1.5, size=p + q), p, q)
        sigma2 = float(rng.uniform(0.3, 3.0))
        w = rng.normal(size=n) * 2
        gamma = sigma2 * arma_acov(ar, ma, n)
        cov = gamma[np.abs(np.subtract.outer(np.arange(n), np.arange(n)))]
        ref = stats.multivariate_normal(np.zeros(n), cov).logpdf(w)
        assert arma_loglik(w, ar, ma, sigma2) == pytest.approx(ref, abs=1e-6)


def test_filter_loglik_with_regressors_matches_dense():
    rng = np.random.default_rng(6)
    n = 15
    x = rng.normal(size=(n, 2))
    beta = np.array([0.5, -1.0])
    ar, ma = np.array([0.6]), np.array([0.3])
    w = x @ beta + rng.normal(size=n)
    gamma = arma_acov(ar, ma, n)
    cov = gamma[np.abs(np.subtract.outer(np.arange(n), np.arange(n)))]
    ref = stats.multivariate_normal(x @ beta, cov).logpdf(w)
    assert arma_loglik(w, ar, ma, 1.0, x, beta) == pytest.approx(ref, abs=1e-6)


def test_compiled_and_python_filters_agree():
    from spurcheck import _fallback, kernels
    from spurcheck.dynreg.arima import stationary_cov

    if "compiled" not in kernels.available_backends():
        pytest.skip("extension not built")
    from spurcheck import _kernels

    rng = np.random.default_rng(7)
    for p, q in [(0, 0), (1, 0), (0, 1), (2, 2), (5, 3), (1, 5)]:
        ar, ma = transform(rng.normal(size=p + q), p, q)
        data = rng.normal(size=(80, 3))
        p0 = stationary_cov(ar, ma)
        o1, s1 = _kernels.arma_filter(ar, ma, p0, data)
        o2, s2 = _fallback.arma_filter(ar, ma, p0, data)
        np.testing.assert_allclose(o1, o2, atol=1e-10)
        assert s1 == pytest.approx(s2, abs=1e-10)


# -- estimation -------------------------------------------------------------

def test_white_noise_mean_and_variance():
    rng = np.random.default_rng(8)
    fit = fit_arima(rng.normal(size=500), (0, 0, 0))
    test = coef_test(fit, "intercept")
    assert abs(test.estimate) < 3 * test.se
    assert 0.85 <= fit.sigma2 <= 1.15


def test_ar1_recovery():
    rng = np.random.default_rng(9)
    fit = fit_arima(simulate_arma(rng, 300, ar=[0.8]), (1, 0, 0))
    assert fit.ar[0] == pytest.approx(0.8, abs=0.15)
    assert len(fit.ar) == 1 and len(fit.ma) == 0 and fit.sigma2 > 0


def test_matches_statsmodels_likelihood_and_se():
    import statsmodels.api as sm

    rng = np.random.default_rng(10)
    x = np.cumsum(rng.normal(size=150))
    y = 0.4 * x + np.cumsum(simulate_arma(rng, 150, ar=[0.5]))
    fit = fit_arima(y, (1, 1, 0), x[:, None], ["x"])
    ref = sm.tsa.SARIMAX(y, exog=x, order=(1, 1, 0)).fit(disp=0, cov_type="oim")
    assert fit.loglik == pytest.approx(ref.llf, abs=1e-4)
    assert fit.beta[0] == pytest.approx(ref.params[0], abs=1e-3)
    assert fit.se_beta[0] == pytest.approx(ref.bse[0], rel=0.02)


def test_differencing_consistency():
    rng = np.random.default_rng(11)
    x = np.cumsum(rng.normal(size=120))
    y = np.cumsum(rng.normal(size=120)) + 0.3 * x
    a = fit_arima(y, (1, 1, 1), x[:, None], compute_se=False)
    b = fit_arima(difference(y, 1), (1, 0, 1), difference(x, 1)[:, None],
                  include_mean=False, compute_se=False)
    assert a.loglik == pytest.approx(b.loglik, abs=1e-4)


def test_fit_errors():
    rng = np.random.default_rng(12)
    y = rng.normal(size=30)
    with pytest.raises(InputError):
        fit_arima(y[:5], (2, 0, 2))
    with pytest.raises(InputError):
        fit_arima(y, (0, 0, 0), np.column_stack([np.arange(30.0), 2 * np.arange(30.0)]))
    with pytest.raises(InputError):
        fit_arima(y, (0, 0, 0), np.ones((29, 1)))
    with pytest.raises(InputError):
        ArimaOrder(6, 0, 0)


# -- coefficient tests ------------------------------------------------------

def test_z_test_identities():
    assert z_test(0.0, 0.7).p_two_sided == 1.0
    assert z_test(1.959963984540054 * 0.3, 0.3).p_two_sided == pytest.approx(0.05, abs=1e-12)


def test_strong_covariate_is_significant():
    rng = np.random.default_rng(13)
    x = rng.normal(size=300).cumsum() / 5
    y = 1.0 * x + simulate_arma(rng, 300, ar=[0.6])
    fit = fit_arima(y, (1, 0, 0), x[:, None], ["x"])
    assert coef_test(fit, "x").p_two_sided < 0.01
    with pytest.raises(InputError):
        coef_test(fit, "nope")


# -- automatic selection ----------------------------------------------------

def test_auto_arima_trace_and_minimality():
    rng = np.random.default_rng(14)
    y = simulate_arma(rng, 150, ar=[0.5], ma=[0.4])
    fit = auto_arima(y)
    ok = [t.aicc for t in fit.search_trace if t.converged]
    assert fit.aicc == pytest.approx(min(ok), abs=1e-6)
    lines = [json.loads(l) for l in trace_jsonl(fit).splitlines()]
    assert len(lines) == len(fit.search_trace)
    assert set(lines[0]) >= {"order", "aicc", "converged"}
    for roots_of in (np.r_[-fit.ar[::-1], 1.0], np.r_[fit.ma[::-1], 1.0]):
        if len(roots_of) > 1:
            assert np.all(np.abs(np.roots(roots_of)) > 1.0)


@pytest.mark.slow
def test_auto_arima_prefers_white_noise():
    rng = np.random.default_rng(15)
    picks = [tuple(auto_arima(rng.normal(size=100)).order) for _ in range(200)]
    assert np.mean([o == (0, 0, 0) for o in picks]) >= 0.80


@pytest.mark.slow
def test_dynamic_regression_size_control():
    """Independent drifted random walks: beta rejected in at most 10% of runs."""
    rng = np.random.default_rng(16)
    rejections = []
    for _ in range(500):
        x = np.cumsum(-0.2 + rng.normal(size=120))
        y = np.cumsum(-0.2 + rng.normal(size=120))
        fit = auto_arima(y, x[:, None], ["x"])
        rejections.append(coef_test(fit, "x").p_two_sided < 0.05)
    assert np.mean(rejections) <= 0.10
