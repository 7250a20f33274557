"""KPSS stationarity statistic with a Bartlett-kernel long-run variance."""

import math

import numpy as np

from ..errors import DegenerateInputError, InputError

CRITICAL_5PCT = {"level": 0.463, "trend": 0.146}


def bartlett_lags(n):
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


def kpss_stat(s, trend="level", lags=None):
    """KPSS statistic for stationarity around a level or a linear trend.

    ``lags`` defaults to ``floor(4 * (n / 100) ** 0.25)``.
    """
    x = np.asarray(s, dtype=float)
    n = len(x)
    if n < 10:
        raise InputError("KPSS needs at least 10 observations")
    if trend == "level":
        e = x - x.mean()
    elif trend == "trend":
        t = np.arange(n, dtype=float)
        design = np.column_stack([np.ones(n), t])
        coef, *_ = np.linalg.lstsq(design, x, rcond=None)
        e = x - design @ coef
    else:
        raise InputError(f"trend must be 'level' or 'trend', got {trend!r}")
    scale = max(1.0, float(np.max(np.abs(x))))
    if float(np.max(np.abs(e))) <= 1e-12 * scale:
        raise DegenerateInputError("series has no variation around the fitted mean")
    lags = bartlett_lags(n) if lags is None else int(lags)
    lrv = float(e @ e) / n
    for h in range(1, lags + 1):
        lrv += 2.0 * (1.0 - h / (lags + 1.0)) * float(e[h:] @ e[:-h]) / n
    partial = np.cumsum(e)
    return float(partial @ partial) / (n * n * lrv)


def kpss_rejects(s, trend="level"):
    """True when stationarity is rejected at the 5% level."""
    return kpss_stat(s, trend) > CRITICAL_5PCT[trend]
