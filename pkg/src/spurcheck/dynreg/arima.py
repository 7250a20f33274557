"""Regression with ARIMA errors by exact Gaussian maximum likelihood.

The model is ``y_t = x_t' beta + u_t`` with ``u_t ~ ARIMA(p, d, q)``. Both
``y`` and the regressors are differenced ``d`` times, the ARMA likelihood
of the differenced errors is evaluated with a Kalman filter started from
the stationary state covariance, and ``beta`` and the innovation variance
are concentrated out by GLS on the filtered columns. Only the ARMA
coefficients are searched numerically, on an unconstrained scale that maps
onto the stationary (AR) and invertible (MA) regions through partial
autocorrelations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.special import ndtr

from .. import kernels
from ..errors import EstimationError, InputError, SingularDesignError

MAX_P = 5
MAX_Q = 5
MAX_D = 2
MAX_RESTARTS = 5
# |u| <= 5 keeps every partial autocorrelation below 0.9999 in magnitude
_U_BOUND = 5.0
_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if not (0 <= self.p <= MAX_P and 0 <= self.q <= MAX_Q and 0 <= self.d <= MAX_D):
            raise InputError(
                f"order {tuple(self)} outside bounds p<={MAX_P}, d<={MAX_D}, q<={MAX_Q}"
            )

    def __iter__(self):
        return iter((self.p, self.d, self.q))

    def __str__(self):
        return f"({self.p},{self.d},{self.q})"


@dataclass(frozen=True)
class ArimaFit:
    order: ArimaOrder
    ar: np.ndarray
    ma: np.ndarray
    beta: np.ndarray
    beta_labels: tuple
    sigma2: float
    loglik: float
    aicc: float
    se_beta: np.ndarray
    n_effective: int
    converged: bool = True
    cov_method: str = "hessian"
    search_trace: tuple = field(default=(), compare=False)

    @property
    def n_params(self):
        return self.order.p + self.order.q + len(self.beta) + 1


@dataclass(frozen=True)
class CoefTest:
    estimate: float
    se: float
    z: float
    p_two_sided: float


def difference(s, d):
    """Apply ``d`` first differences; the result is ``d`` observations shorter."""
    x = np.asarray(s, dtype=float)
    if d < 0:
        raise InputError("d must be non-negative")
    if len(x) <= d:
        raise InputError(f"cannot difference {len(x)} observations {d} times")
    return np.diff(x, n=d, axis=0) if d else x.copy()


# -- parameter transforms ---------------------------------------------------

def pacf_to_coefs(r):
    """Durbin-Levinson map from partial autocorrelations to AR coefficients."""
    phi = np.zeros(0)
    for k, rk in enumerate(r):
        phi = np.append(phi - rk * phi[::-1], rk)
    return phi


def coefs_to_pacf(phi):
    """Inverse of ``pacf_to_coefs``; raises if ``phi`` is not stationary."""
    phi = np.array(phi, dtype=float)
    r = np.zeros(len(phi))
    for k in range(len(phi) - 1, -1, -1):
        rk = phi[k]
        if abs(rk) >= 1.0:
            raise ValueError("non-stationary coefficients")
        r[k] = rk
        phi = (phi[:k] + rk * phi[:k][::-1]) / (1.0 - rk * rk)
    return r


def transform(u, p, q):
    """Unconstrained vector -> (AR, MA) coefficients."""
    u = np.asarray(u, dtype=float)
    ar = pacf_to_coefs(np.tanh(u[:p]))
    ma = -pacf_to_coefs(np.tanh(u[p : p + q]))
    return ar, ma


def untransform(ar, ma):
    r_ar = coefs_to_pacf(ar)
    r_ma = coefs_to_pacf(-np.asarray(ma, dtype=float))
    clip = math.tanh(_U_BOUND)
    return np.arctanh(np.clip(np.concatenate([r_ar, r_ma]), -clip, clip))


def is_stationary(ar):
    try:
        coefs_to_pacf(ar)
    except ValueError:
        return False
    return True


# -- likelihood -------------------------------------------------------------

def stationary_cov(ar, ma):
    """Unit-innovation state covariance of the ARMA state-space form."""
    r = max(len(ar), len(ma) + 1)
    tmat = np.zeros((r, r))
    tmat[: len(ar), 0] = ar
    tmat[np.arange(r - 1), np.arange(1, r)] = 1.0
    rvec = np.zeros(r)
    rvec[0] = 1.0
    rvec[1 : len(ma) + 1] = ma
    if r == 1:
        return np.array([[1.0 / (1.0 - tmat[0, 0] ** 2)]])
    with warnings.catch_warnings():
        # near the unit circle the system is ill-conditioned; callers check finiteness
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        return linalg.solve_discrete_lyapunov(tmat, np.outer(rvec, rvec))


def filter_columns(ar, ma, data):
    """Standardized innovations of every column of ``data`` and sum log F."""
    p0 = stationary_cov(ar, ma)
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return kernels.arma_filter(
        np.ascontiguousarray(ar, dtype=float), np.ascontiguousarray(ma, dtype=float), p0, data
    )


def arma_loglik(w, ar, ma, sigma2, xreg=None, beta=None):
    """Exact Gaussian log-likelihood of ``w - xreg @ beta`` as ARMA(ar, ma)."""
    w = np.asarray(w, dtype=float)
    e = w if xreg is None else w - np.asarray(xreg, dtype=float) @ np.asarray(beta)
    out, sumlog = filter_columns(ar, ma, e)
    n = len(w)
    return -0.5 * (n * _LOG2PI + n * math.log(sigma2) + sumlog + float(out[:, 0] @ out[:, 0]) / sigma2)


def _profile(ar, ma, w, z):
    """Concentrate beta and sigma2 out; returns (loglik, beta, sigma2, zt)."""
    data = w[:, None] if z.shape[1] == 0 else np.column_stack([w, z])
    out, sumlog = filter_columns(ar, ma, data)
    if not (math.isfinite(sumlog) and np.all(np.isfinite(out))):
        return -math.inf, None, None, None
    wt, zt = out[:, 0], out[:, 1:]
    if zt.shape[1]:
        beta, *_ = np.linalg.lstsq(zt, wt, rcond=None)
        e = wt - zt @ beta
    else:
        beta = np.zeros(0)
        e = wt
    n = len(w)
    sigma2 = float(e @ e) / n
    if not sigma2 > 0:
        sigma2 = np.finfo(float).tiny
    ll = -0.5 * (n * (_LOG2PI + math.log(sigma2) + 1.0) + sumlog)
    return ll, beta, sigma2, zt


def _profile_in_beta(ar, ma, beta, w, z):
    """Log-likelihood with only sigma2 concentrated out (beta held fixed)."""
    e = w - z @ beta if z.shape[1] else w
    out, sumlog = filter_columns(ar, ma, e)
    n = len(w)
    sigma2 = float(out[:, 0] @ out[:, 0]) / n
    if not (math.isfinite(sumlog) and sigma2 > 0 and math.isfinite(sigma2)):
        return -math.inf
    return -0.5 * (n * (_LOG2PI + math.log(sigma2) + 1.0) + sumlog)


def _hessian(f, x, step=1e-4):
    k = len(x)
    h = np.empty((k, k))
    f0 = f(x)
    steps = step * np.maximum(1.0, np.abs(x))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        h[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = steps[j]
            h[i, j] = h[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    return h


def aicc(loglik, k, n):
    if n - k - 1 <= 0:
        return math.inf
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


def _minimize(objective, dim, seed):
    rng = np.random.default_rng(seed)
    best = None
    tried = 0
    starts = [np.zeros(dim)]
    while tried < MAX_RESTARTS:
        x0 = starts.pop() if starts else rng.normal(scale=0.5, size=dim)
        tried += 1
        # infeasible points return inf; their finite differences are nan
        with np.errstate(invalid="ignore"):
            res = optimize.minimize(
                objective, x0, method="L-BFGS-B",
                bounds=[(-_U_BOUND, _U_BOUND)] * dim,
                options={"ftol": 1e-12, "gtol": 1e-7, "maxiter": 500},
            )
        # line-search stalls at the optimum are routine with numeric gradients
        ok = bool(res.success) or "ABNORMAL" in str(res.message)
        if not np.isfinite(res.fun):
            ok = False
        if best is None or (np.isfinite(res.fun) and res.fun < best[0].fun):
            best = (res, ok)
        # a second independent start that agrees closes the search
        if tried >= 2 and best[1] and abs(res.fun - best[0].fun) < 1e-6:
            break
    return best


def fit_arima(y, order, xreg=None, xreg_labels=None, include_mean=None,
              compute_se=True, seed=0) -> ArimaFit:
    """Maximum-likelihood fit of a regression with ARIMA errors.

    Parameters
    ----------
    y : array_like
        Response, contiguous in time.
    order : ArimaOrder or tuple
        ``(p, d, q)``.
    xreg : array_like, optional
        ``(n, k)`` regressors aligned with ``y``; differenced with it.
    include_mean : bool, optional
        Add a constant column. Defaults to ``d == 0``.
    compute_se : bool
        Skip the numerical Hessian when only the likelihood is needed.

    Raises
    ------
    InputError
        Too few observations or a singular regressor matrix.
    EstimationError
        No start converged within the restart budget.
    """
    if not isinstance(order, ArimaOrder):
        order = ArimaOrder(*order)
    p, d, q = order.p, order.d, order.q
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise InputError("response must be finite")
    n_raw = len(y)
    if xreg is None:
        x = np.zeros((n_raw, 0))
    else:
        x = np.asarray(xreg, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] != n_raw:
            raise InputError(f"xreg has {x.shape[0]} rows for {n_raw} observations")
    labels = list(xreg_labels) if xreg_labels is not None else [f"x{i}" for i in range(x.shape[1])]
    if len(labels) != x.shape[1]:
        raise InputError("xreg_labels length does not match xreg columns")
    if include_mean is None:
        include_mean = d == 0
    w = difference(y, d)
    z = difference(x, d) if x.shape[1] else np.zeros((len(w), 0))
    if include_mean:
        z = np.column_stack([np.ones(len(w)), z])
        labels = ["intercept"] + labels
    n = len(w)
    k = z.shape[1]
    if n <= p + q + k + 2:
        raise InputError(f"{n} observations after differencing are too few for {order} with {k} regressors")
    if k:
        rdiag = np.abs(np.diag(np.linalg.qr(z, mode="r")))
        if rdiag.min() <= 1e-10 * rdiag.max():
            raise SingularDesignError("regressor matrix is singular after differencing")

    # scale to unit size so optimizer and Hessian steps are comparable
    w_scale = float(np.std(w)) or 1.0
    z_scale = np.array([float(np.std(c)) or float(np.max(np.abs(c))) or 1.0 for c in z.T])
    ws = w / w_scale
    zs = z / z_scale if k else z

    def objective(u):
        ar, ma = transform(u, p, q)
        try:
            ll = _profile(ar, ma, ws, zs)[0]
        except (ValueError, np.linalg.LinAlgError):
            return np.inf
        return -ll if np.isfinite(ll) else np.inf

    if p + q == 0:
        u_hat = np.zeros(0)
        converged = True
    else:
        res, converged = _minimize(objective, p + q, seed)
        if not converged or not np.isfinite(res.fun):
            raise EstimationError(
                f"ARIMA{order} did not converge after {MAX_RESTARTS} starts",
                {"order": str(order), "u": res.x.tolist(), "loglik": -float(res.fun),
                 "message": str(res.message)},
            )
        u_hat = res.x
    ar, ma = transform(u_hat, p, q)
    ll_s, beta_s, sigma2_s, zt = _profile(ar, ma, ws, zs)

    se_s = np.zeros(k)
    cov_method = "none"
    if compute_se and k:
        se_s, cov_method = _beta_se(ar, ma, beta_s, sigma2_s, zt, ws, zs)

    loglik = ll_s - n * math.log(w_scale)
    beta = beta_s * w_scale / z_scale if k else beta_s
    se_beta = se_s * w_scale / z_scale if k else se_s
    n_params = p + q + k + 1
    return ArimaFit(
        order=order, ar=ar, ma=ma, beta=beta, beta_labels=tuple(labels),
        sigma2=sigma2_s * w_scale**2, loglik=loglik, aicc=aicc(loglik, n_params, n),
        se_beta=se_beta, n_effective=n, converged=converged, cov_method=cov_method,
    )


def _beta_se(ar, ma, beta, sigma2, zt, w, z):
    """Standard errors of beta from the inverse observed information.

    The information is the negative Hessian of the log-likelihood with the
    variance concentrated out, over (AR, MA, beta). Falls back to the GLS
    covariance when the Hessian is not negative definite (e.g. an estimate
    on the stationarity boundary).
    """
    p, q = len(ar), len(ma)
    x0 = np.concatenate([ar, ma, beta])

    def ll(x):
        a, m, b = x[:p], x[p : p + q], x[p + q :]
        if not (is_stationary(a) and is_stationary(-m)):
            return -np.inf
        return _profile_in_beta(a, m, b, w, z)

    gls = np.sqrt(np.diag(sigma2 * np.linalg.inv(zt.T @ zt)))
    try:
        h = _hessian(ll, x0)
        if not np.all(np.isfinite(h)):
            raise np.linalg.LinAlgError
        cov = np.linalg.inv(-h)
        var = np.diag(cov)[p + q :]
        if np.any(var <= 0) or np.any(np.linalg.eigvalsh(-h) <= 0):
            raise np.linalg.LinAlgError
        return np.sqrt(var), "hessian"
    except np.linalg.LinAlgError:
        return gls, "gls"


def coef_test(fit: ArimaFit, which: str) -> CoefTest:
    """Two-sided z-test of one regression coefficient against zero."""
    try:
        i = fit.beta_labels.index(which)
    except ValueError:
        raise InputError(f"no coefficient labelled {which!r}; have {fit.beta_labels}") from None
    est = float(fit.beta[i])
    se = float(fit.se_beta[i])
    if not se > 0:
        raise InputError(f"standard error of {which!r} unavailable")
    return z_test(est, se)


def z_test(estimate, se) -> CoefTest:
    z = estimate / se
    return CoefTest(estimate, se, z, float(min(1.0, 2.0 * ndtr(-abs(z)))))
