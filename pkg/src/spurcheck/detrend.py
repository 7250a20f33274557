"""OLS residualization on time and covariates, plus a loess smoother.

Residualization mirrors the common practice of regressing both series on
calendar year (and other predictors) and correlating the residuals. The
regressions run on the intersection of years across every input; nothing
is imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import AlignmentError, InputError, SingularDesignError
from .series import TimeSeries, common_years
from .tscore import EXACT_CUTOFF, KendallResult, kendall_tau

DEFAULT_LOESS_SPAN = 0.3
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    r_squared: float
    design_labels: tuple


@dataclass(frozen=True)
class ResidualSeries:
    base: str
    residuals: TimeSeries
    covariate_set: tuple


def _qr(design):
    q, r = np.linalg.qr(design, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= _RANK_TOL * diag.max():
        raise SingularDesignError("design matrix is rank deficient")
    return q, r


def ols_fit(y, design, labels: Sequence[str] | None = None) -> OlsFit:
    """Least squares via Householder QR of the design.

    ``design`` must already contain the intercept column if one is wanted.
    """
    y = np.asarray(y, dtype=float)
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    n, k = design.shape
    if len(y) != n:
        raise InputError(f"{len(y)} responses but {n} design rows")
    if n <= k:
        raise InputError(f"need more rows than columns, got {n} x {k}")
    q, r = _qr(design)
    qty = q.T @ y
    coef = np.linalg.solve(r, qty) if k > 1 else qty / r[0, 0]
    resid = y - q @ qty
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0 else min(1.0, max(0.0, 1.0 - float(resid @ resid) / sst))
    labels = tuple(labels) if labels is not None else tuple(f"x{i}" for i in range(k))
    return OlsFit(np.atleast_1d(coef), resid, r2, labels)


class Residualizer:
    """Projection off a fixed design; reused across many responses.

    The design is ``[intercept, year (optional), covariates...]`` built on
    ``years``.
    """

    def __init__(self, years, covariates: Mapping[str, TimeSeries] | None = None,
                 time: bool = True):
        covariates = dict(covariates or {})
        years = np.asarray(years, dtype=np.int64)
        cols = [np.ones(len(years))]
        labels = ["intercept"]
        if time:
            cols.append(years.astype(float))
            labels.append("year")
        for name in sorted(covariates):
            cols.append(covariates[name].restrict(years).values)
            labels.append(name)
        self.years = years
        self.labels = tuple(labels)
        self.design = np.column_stack(cols)
        if len(years) <= self.design.shape[1]:
            raise AlignmentError(
                f"{len(years)} common years for {self.design.shape[1]} design columns"
            )
        self._q, _ = _qr(self.design)

    def apply(self, values):
        """Residuals of one response (1-D) or many (columns of a 2-D array)."""
        values = np.asarray(values, dtype=float)
        return values - self._q @ (self._q.T @ values)


def _common(series: Sequence[TimeSeries], covariates: Mapping[str, TimeSeries]):
    return common_years(*series, *covariates.values())


def residualize(s: TimeSeries, covariates: Mapping[str, TimeSeries] | None = None,
                time: bool = True) -> ResidualSeries:
    covariates = dict(covariates or {})
    years = _common([s], covariates)
    res = Residualizer(years, covariates, time=time)
    resid = res.apply(s.restrict(years).values)
    return ResidualSeries(
        s.id, TimeSeries(f"{s.id}|resid", years, resid, s.source), res.labels[1:]
    )


def residual_correlation(a: TimeSeries, b: TimeSeries,
                         covariates: Mapping[str, TimeSeries] | None = None,
                         time: bool = True, exact_cutoff: int = EXACT_CUTOFF) -> KendallResult:
    """Kendall tau between the OLS residuals of ``a`` and ``b``.

    Both are residualized on the same design over their common years.
    """
    covariates = dict(covariates or {})
    years = _common([a, b], covariates)
    res = Residualizer(years, covariates, time=time)
    ra = res.apply(a.restrict(years).values)
    rb = res.apply(b.restrict(years).values)
    return kendall_tau(ra, rb, exact_cutoff)


def loess_smooth(s: TimeSeries, span: float = DEFAULT_LOESS_SPAN) -> TimeSeries:
    """Degree-1 loess with tricube weights, evaluated at every observed year.

    No robustness iterations. Each local window holds ``ceil(span * n)``
    nearest years.
    """
    if not 0 < span <= 1:
        raise InputError(f"span must lie in (0, 1], got {span}")
    n = len(s)
    if n < 5:
        raise InputError("loess needs at least 5 observations")
    if math.ceil(span * n - 1e-12) < 3:
        raise InputError(f"span {span} leaves fewer than 3 points per window")
    fitted = kernels.loess(s.years.astype(float), s.values, float(span))
    return TimeSeries(f"{s.id}|loess", s.years, fitted, s.source)
