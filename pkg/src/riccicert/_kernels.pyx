# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: piecewise polynomial evaluation, doubly warped Ricci
fields, and the min reduction used by the certificate engine."""
import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()


cdef inline Py_ssize_t _locate(const double[:] breaks, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = breaks.shape[0] - 2, mid
    if x <= breaks[0]:
        return 0
    if x >= breaks[hi]:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if breaks[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


def pp_eval(const double[:] breaks, const double[:, :] coeffs, const double[:] r):
    """Value, first and second derivative of a piecewise polynomial.

    coeffs[i, j] multiplies (r - breaks[i])**j.
    """
    cdef Py_ssize_t npts = r.shape[0], deg = coeffs.shape[1] - 1
    cdef Py_ssize_t i, j, k
    cdef double t, v, d1, d2, c
    out = np.empty((3, npts), dtype=np.float64)
    cdef double[:, :] o = out
    with nogil:
        for i in range(npts):
            k = _locate(breaks, r[i])
            t = r[i] - breaks[k]
            v = 0.0
            d1 = 0.0
            d2 = 0.0
            for j in range(deg, -1, -1):
                c = coeffs[k, j]
                d2 = d2 * t + 2.0 * d1
                d1 = d1 * t + v
                v = v * t + c
            o[0, i] = v
            o[1, i] = d1
            o[2, i] = d2
    return out[0], out[1], out[2]


def ricci_dw(const double[:] h0, const double[:] h1, const double[:] h2,
             const double[:] f0, const double[:] f1, const double[:] f2,
             int n, int m):
    """Unit-frame Ricci diagonal of dr^2 + h^2 ds_n^2 + f^2 ds_m^2."""
    cdef Py_ssize_t i, npts = h0.shape[0]
    cdef double hh, ff, mix
    out = np.empty((3, npts), dtype=np.float64)
    cdef double[:, :] o = out
    with nogil:
        for i in range(npts):
            hh = h2[i] / h0[i]
            ff = f2[i] / f0[i]
            mix = f1[i] * h1[i] / (f0[i] * h0[i])
            o[0, i] = -n * hh - m * ff
            o[1, i] = (n - 1) * (1.0 - h1[i] * h1[i]) / (h0[i] * h0[i]) - hh - m * mix
            o[2, i] = (m - 1) * (1.0 - f1[i] * f1[i]) / (f0[i] * f0[i]) - ff - n * mix
    return out[0], out[1], out[2]


def min_reduce(const double[:] v):
    """Return (min, first argmin, first non-finite index or -1)."""
    cdef Py_ssize_t i, arg = -1, bad = -1, npts = v.shape[0]
    cdef double best = 0.0, x
    with nogil:
        for i in range(npts):
            x = v[i]
            if not isfinite(x):
                bad = i
                break
            if arg < 0 or x < best:
                best = x
                arg = i
    return best, arg, bad
