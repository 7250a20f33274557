"""Pure numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_kernels`` extension; used
when the extension is not built or ``SPURCHECK_PURE=1`` is set.
"""

import math

import numpy as np


def kendall_counts(x, y):
    """Return ``(S, ties_x, ties_y)`` for paired samples.

    ``S`` is concordant minus discordant pairs; ``ties_x``/``ties_y`` count
    pairs tied in x (resp. y), joint ties included in both.
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n = len(x)
    iu = np.triu_indices(n, 1)
    dx = np.sign(x[:, None] - x[None, :])[iu]
    dy = np.sign(y[:, None] - y[None, :])[iu]
    s = int(np.sum(dx * dy))
    return s, int(np.count_nonzero(dx == 0)), int(np.count_nonzero(dy == 0))


def arma_filter(phi, theta, p0, data):
    """Kalman filter for a zero-mean unit-variance ARMA process.

    ``data`` is ``(n, m)``; every column is filtered with the same gains.
    Returns the standardized innovations ``v_t / sqrt(F_t)`` as an
    ``(n, m)`` array and ``sum(log F_t)``.
    """
    data = np.asarray(data, dtype=float)
    n, m = data.shape
    r = p0.shape[0]
    tmat = np.zeros((r, r))
    tmat[: len(phi), 0] = phi
    tmat[np.arange(r - 1), np.arange(1, r)] = 1.0
    rvec = np.zeros(r)
    rvec[0] = 1.0
    rvec[1 : len(theta) + 1] = theta
    rr = np.outer(rvec, rvec)

    a = np.zeros((r, m))
    p = np.array(p0, dtype=float)
    out = np.empty((n, m))
    sumlog = 0.0
    for t in range(n):
        f = p[0, 0]
        v = data[t] - a[0]
        out[t] = v / math.sqrt(f)
        sumlog += math.log(f)
        k = p[:, 0] / f
        a = a + np.outer(k, v)
        p = p - np.outer(p[:, 0], p[0, :]) / f
        a = tmat @ a
        p = tmat @ p @ tmat.T + rr
    return out, sumlog


def loess(x, y, span):
    """Local linear fit with tricube weights at every ``x``.

    The neighbourhood of each point holds the ``ceil(span * n)`` nearest
    observations; the farthest of them sets the bandwidth.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    k = min(n, int(math.ceil(span * n - 1e-12)))
    fitted = np.empty(n)
    for i in range(n):
        d = np.abs(x - x[i])
        idx = np.argsort(d, kind="stable")[:k]
        h = d[idx].max()
        w = (1.0 - (d[idx] / h) ** 3) ** 3
        xc = x[idx] - x[i]
        sw = w.sum()
        mx = np.dot(w, xc) / sw
        my = np.dot(w, y[idx]) / sw
        sxx = np.dot(w, (xc - mx) ** 2)
        sxy = np.dot(w, (xc - mx) * (y[idx] - my))
        slope = sxy / sxx if sxx > 0 else 0.0
        fitted[i] = my - slope * mx
    return fitted
