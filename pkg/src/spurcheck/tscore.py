"""Kendall rank correlation and the trend/lag diagnostics built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from . import kernels
from .errors import DegenerateInputError, InputError
from .series import TimeSeries

#: Largest tie-free sample size that gets an exact permutation P-value.
EXACT_CUTOFF = 9

TAU_VARIANT = "tau-b"


@dataclass(frozen=True)
class KendallResult:
    tau: float
    p_two_sided: float
    n: int
    ties_x: int
    ties_y: int
    method: str  # "exact" or "normal_approx"


@dataclass(frozen=True)
class SeriesDiagnostics:
    tau_Y: float
    tau_L: float


@dataclass(frozen=True)
class DiagnosticSummary:
    class_label: str
    abs_tau_Y_median: float
    tau_L_median: float
    count: int


@lru_cache(maxsize=None)
def _inversion_counts(n):
    """Number of permutations of n items with k inversions, k = 0..n(n-1)/2."""
    counts = [1]
    for m in range(2, n + 1):
        new = [0] * (len(counts) + m - 1)
        for k, c in enumerate(counts):
            for j in range(m):
                new[k + j] += c
        counts = new
    return tuple(counts)


def exact_p_value(s, n):
    """Two-sided P(|S| >= |s|) under the permutation null, no ties."""
    counts = _inversion_counts(n)
    n0 = n * (n - 1) // 2
    hits = sum(c for k, c in enumerate(counts) if abs(n0 - 2 * k) >= abs(s))
    return hits / math.factorial(n)


def _tie_sums(a):
    _, t = np.unique(a, return_counts=True)
    t = t[t > 1].astype(float)
    return (
        float(np.sum(t * (t - 1) * (2 * t + 5))),
        float(np.sum(t * (t - 1))),
        float(np.sum(t * (t - 1) * (t - 2))),
    )


def s_variance(x, y):
    """Null variance of S with the standard tie correction."""
    n = len(x)
    vt, t1, t2 = _tie_sums(x)
    vu, u1, u2 = _tie_sums(y)
    var = (n * (n - 1) * (2 * n + 5) - vt - vu) / 18.0
    var += t1 * u1 / (2.0 * n * (n - 1))
    if n > 2:
        var += t2 * u2 / (9.0 * n * (n - 1) * (n - 2))
    return var


def kendall_tau(x, y, exact_cutoff: int = EXACT_CUTOFF) -> KendallResult:
    """Kendall tau-b with a two-sided P-value.

    Tie-free samples with ``n <= exact_cutoff`` get the exact permutation
    P-value; everything else uses the normal approximation with the
    tie-corrected variance and no continuity correction.

    Raises
    ------
    InputError
        Lengths differ, fewer than two pairs, or non-finite values.
    DegenerateInputError
        Either argument is constant, so tau is undefined.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise InputError(f"length mismatch: {x.shape} vs {y.shape}")
    n = len(x)
    if n < 2:
        raise InputError("need at least 2 paired observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InputError("values must be finite")
    s, tx, ty = kernels.kendall_counts(x, y)
    n0 = n * (n - 1) // 2
    if tx == n0 or ty == n0:
        raise DegenerateInputError("an argument is constant; tau is undefined")
    tau = s / math.sqrt((n0 - tx) * (n0 - ty))
    tau = min(1.0, max(-1.0, tau))
    if tx == 0 and ty == 0 and n <= exact_cutoff:
        p = exact_p_value(s, n)
        method = "exact"
    else:
        z = s / math.sqrt(s_variance(x, y))
        p = float(2.0 * ndtr(-abs(z)))
        method = "normal_approx"
    return KendallResult(tau, min(1.0, p), n, tx, ty, method)


def trend_correlation(s: TimeSeries) -> float:
    """Kendall tau between a series and its calendar years."""
    return kendall_tau(s.years, s.values).tau


def lag_pairs(s: TimeSeries):
    """Current and previous values for every pair of consecutive years."""
    keep = np.flatnonzero(np.diff(s.years) == 1)
    return s.values[keep + 1], s.values[keep]


def lag1_dependence(s: TimeSeries) -> float:
    """Kendall tau between v_t and v_{t-1} over consecutive observed years."""
    current, lagged = lag_pairs(s)
    if len(current) < 2:
        raise DegenerateInputError(
            f"{s.id}: fewer than 2 consecutive-year lag pairs"
        )
    return kendall_tau(current, lagged).tau


def diagnose(s: TimeSeries) -> SeriesDiagnostics:
    return SeriesDiagnostics(trend_correlation(s), lag1_dependence(s))


def summarize_diagnostics(
    batch: Sequence[SeriesDiagnostics], label: str
) -> DiagnosticSummary:
    """Median |tau_Y| and median signed tau_L over a batch.

    Even-length batches take the midpoint average of the two middle values.
    """
    if len(batch) == 0:
        raise InputError("empty diagnostics batch")
    ty = np.array([d.tau_Y for d in batch])
    tl = np.array([d.tau_L for d in batch])
    return DiagnosticSummary(
        label, float(np.median(np.abs(ty))), float(np.median(tl)), len(batch)
    )


def significance_rate(results: Iterable, alpha: float) -> float:
    """Fraction of results with two-sided P below ``alpha``.

    Accepts KendallResult objects or bare P-values.
    """
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    p = np.array(
        [r.p_two_sided if isinstance(r, KendallResult) else r for r in results],
        dtype=float,
    )
    if p.size == 0:
        raise InputError("no results to summarise")
    return float(np.mean(p < alpha))
