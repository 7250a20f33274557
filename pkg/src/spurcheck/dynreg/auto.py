"""Stepwise AICc order search for regression with ARIMA errors."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, EstimationError, InputError
from .arima import MAX_D, MAX_P, MAX_Q, ArimaFit, ArimaOrder, difference, fit_arima
from .kpss import kpss_rejects

START_ORDERS = ((2, 2), (0, 0), (1, 0), (0, 1))
MAX_MODELS = 94
# candidates with an AR or MA root this close to the unit circle are rejected
MIN_ROOT_MODULUS = 1.01


@dataclass(frozen=True)
class TraceEntry:
    order: str
    aicc: float
    converged: bool
    error: str = ""


def min_root_modulus(ar, ma):
    """Smallest modulus among the roots of the AR and MA polynomials."""
    mods = [math.inf]
    for poly in (np.r_[1.0, -np.asarray(ar)], np.r_[1.0, np.asarray(ma)]):
        poly = np.trim_zeros(poly, "b")
        if len(poly) > 1:
            mods.append(float(np.min(np.abs(np.roots(poly[::-1])))))
    return min(mods)


def choose_d(y, max_d=MAX_D):
    """Number of differences: add one while the KPSS level test rejects.

    The test runs on the response itself. Testing the residuals of ``y`` on
    the regressors instead under-differences spurious regressions: the
    residuals of one random walk on an independent one pass KPSS about half
    the time.
    """
    x = np.asarray(y, dtype=float)
    d = 0
    while d < max_d and len(x) - d >= 10:
        try:
            if not kpss_rejects(difference(x, d)):
                break
        except DegenerateInputError:
            break
        d += 1
    return d


def auto_arima(y, xreg=None, xreg_labels=None, max_p=MAX_P, max_q=MAX_Q,
               max_d=MAX_D, d=None) -> ArimaFit:
    """Select ``(p, d, q)`` by KPSS differencing and a stepwise AICc search.

    Starting from (2,d,2), (0,d,0), (1,d,0) and (0,d,1), the search moves to
    the best neighbour differing by one in p or in q while that lowers AICc.
    Candidates with a root of modulus below ``MIN_ROOT_MODULUS`` count as
    failed. The returned fit carries the full search trace and is the minimum-AICc
    model among all that were estimated.
    """
    y = np.asarray(y, dtype=float)
    if d is None:
        d = choose_d(y, max_d)
    fits = {}
    trace = []

    def visit(p, q):
        if (p, q) in fits or not (0 <= p <= max_p and 0 <= q <= max_q):
            return
        order = ArimaOrder(p, d, q)
        try:
            fit = fit_arima(y, order, xreg, xreg_labels, compute_se=False)
            if min_root_modulus(fit.ar, fit.ma) < MIN_ROOT_MODULUS:
                fits[(p, q)] = None
                trace.append(TraceEntry(str(order), fit.aicc, False, "root near unit circle"))
                return
            fits[(p, q)] = fit
            trace.append(TraceEntry(str(order), fit.aicc, True))
        except (EstimationError, InputError) as exc:
            fits[(p, q)] = None
            trace.append(TraceEntry(str(order), math.inf, False, str(exc)))

    for p, q in START_ORDERS:
        visit(min(p, max_p), min(q, max_q))

    def best_key():
        ok = [(f.aicc, key) for key, f in fits.items() if f is not None and np.isfinite(f.aicc)]
        return min(ok)[1] if ok else None

    current = best_key()
    if current is None:
        raise EstimationError("no candidate ARIMA model could be estimated",
                              {"trace": [dataclasses.asdict(t) for t in trace]})
    while len(fits) < MAX_MODELS:
        p, q = current
        for dp, dq in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            visit(p + dp, q + dq)
        nxt = best_key()
        if nxt == current:
            break
        current = nxt

    chosen = fits[current]
    final = fit_arima(y, chosen.order, xreg, xreg_labels, compute_se=True)
    return dataclasses.replace(final, search_trace=tuple(trace))


def trace_jsonl(fit: ArimaFit) -> str:
    """Search trace as JSON lines (order, aicc, converged)."""
    lines = []
    for t in fit.search_trace:
        rec = {"order": t.order, "aicc": t.aicc if math.isfinite(t.aicc) else None,
               "converged": t.converged}
        if t.error:
            rec["error"] = t.error
        lines.append(json.dumps(rec))
    return "\n".join(lines) + ("\n" if lines else "")
