# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``spurcheck._fallback`` exactly."""

import numpy as np
from libc.math cimport log, sqrt, ceil, fabs


def kendall_counts(x, y):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i, j
    cdef long long s = 0, tx = 0, ty = 0
    cdef double dx, dy
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx = xv[i] - xv[j]
            dy = yv[i] - yv[j]
            if dx == 0:
                tx += 1
            if dy == 0:
                ty += 1
            if dx != 0 and dy != 0:
                if (dx > 0) == (dy > 0):
                    s += 1
                else:
                    s -= 1
    return int(s), int(tx), int(ty)


def arma_filter(phi, theta, p0, data):
    cdef const double[:, ::1] y = np.ascontiguousarray(data, dtype=np.float64)
    cdef const double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    cdef Py_ssize_t r = p0.shape[0], np_ = ph.shape[0], nq = th.shape[0]
    cdef double[:, ::1] p = np.array(p0, dtype=np.float64, order="C")
    cdef double[:, ::1] tmp = np.zeros((r, r))
    cdef double[:, ::1] a = np.zeros((r, m))
    cdef double[::1] tcol = np.zeros(r)
    cdef double[::1] rvec = np.zeros(r)
    cdef double[::1] k = np.zeros(r)
    cdef double[::1] v = np.zeros(m)
    out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, i, j, c
    cdef double f, sf, sumlog = 0.0, a0

    for i in range(np_):
        tcol[i] = ph[i]
    rvec[0] = 1.0
    for i in range(nq):
        rvec[i + 1] = th[i]

    for t in range(n):
        f = p[0, 0]
        sf = sqrt(f)
        sumlog += log(f)
        for c in range(m):
            v[c] = y[t, c] - a[0, c]
            out[t, c] = v[c] / sf
        for i in range(r):
            k[i] = p[i, 0] / f
        # measurement update
        for i in range(r):
            for c in range(m):
                a[i, c] += k[i] * v[c]
        for i in range(r):
            for j in range(r):
                tmp[i, j] = p[i, j] - p[i, 0] * p[0, j] / f
        # time update: T has phi in column 0 and ones on the superdiagonal
        for c in range(m):
            a0 = a[0, c]
            for i in range(r - 1):
                a[i, c] = tcol[i] * a0 + a[i + 1, c]
            a[r - 1, c] = tcol[r - 1] * a0
        # p = T tmp T' + R R'; first form W = T tmp (rows)
        for j in range(r):
            a0 = tmp[0, j]
            for i in range(r - 1):
                p[i, j] = tcol[i] * a0 + tmp[i + 1, j]
            p[r - 1, j] = tcol[r - 1] * a0
        # then W T' (columns)
        for i in range(r):
            a0 = p[i, 0]
            for j in range(r - 1):
                tmp[i, j] = tcol[j] * a0 + p[i, j + 1]
            tmp[i, r - 1] = tcol[r - 1] * a0
        for i in range(r):
            for j in range(r):
                p[i, j] = tmp[i, j] + rvec[i] * rvec[j]
    return out_arr, sumlog


def loess(x, y, double span):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i, j, lo, hi, k
    fitted_arr = np.empty(n)
    cdef double[::1] fitted = fitted_arr
    cdef double h, d, w, sw, mx, my, sxx, sxy, xc, u, slope
    k = <Py_ssize_t>ceil(span * n - 1e-12)
    if k > n:
        k = n
    for i in range(n):
        # grow a contiguous window of k nearest points (x sorted ascending)
        lo = i
        hi = i
        while hi - lo + 1 < k:
            if lo == 0:
                hi += 1
            elif hi == n - 1:
                lo -= 1
            elif fabs(xv[lo - 1] - xv[i]) <= fabs(xv[hi + 1] - xv[i]):
                lo -= 1
            else:
                hi += 1
        h = fabs(xv[lo] - xv[i])
        d = fabs(xv[hi] - xv[i])
        if d > h:
            h = d
        sw = 0.0
        mx = 0.0
        my = 0.0
        for j in range(lo, hi + 1):
            u = fabs(xv[j] - xv[i]) / h
            w = 1.0 - u * u * u
            w = w * w * w
            sw += w
            mx += w * (xv[j] - xv[i])
            my += w * yv[j]
        mx /= sw
        my /= sw
        sxx = 0.0
        sxy = 0.0
        for j in range(lo, hi + 1):
            u = fabs(xv[j] - xv[i]) / h
            w = 1.0 - u * u * u
            w = w * w * w
            xc = xv[j] - xv[i] - mx
            sxx += w * xc * xc
            sxy += w * xc * (yv[j] - my)
        slope = sxy / sxx if sxx > 0 else 0.0
        fitted[i] = my - slope * mx
    return fitted_arr
