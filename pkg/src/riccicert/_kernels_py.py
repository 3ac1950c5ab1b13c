"""Pure numpy versions of the compiled kernels."""
import numpy as np


def pp_eval(breaks, coeffs, r):
    breaks = np.asarray(breaks, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    r = np.asarray(r, dtype=float)
    k = np.clip(np.searchsorted(breaks, r, side="right") - 1, 0, len(breaks) - 2)
    t = r - breaks[k]
    c = coeffs[k]
    v = np.zeros_like(t)
    d1 = np.zeros_like(t)
    d2 = np.zeros_like(t)
    for j in range(coeffs.shape[1] - 1, -1, -1):
        d2 = d2 * t + 2.0 * d1
        d1 = d1 * t + v
        v = v * t + c[:, j]
    return v, d1, d2


def ricci_dw(h0, h1, h2, f0, f1, f2, n, m):
    hh = h2 / h0
    ff = f2 / f0
    mix = f1 * h1 / (f0 * h0)
    rr = -n * hh - m * ff
    rh = (n - 1) * (1.0 - h1 * h1) / (h0 * h0) - hh - m * mix
    rf = (m - 1) * (1.0 - f1 * f1) / (f0 * f0) - ff - n * mix
    return rr, rh, rf


def min_reduce(v):
    v = np.asarray(v, dtype=float)
    bad = np.flatnonzero(~np.isfinite(v))
    if bad.size:
        b = int(bad[0])
        if b == 0:
            return 0.0, -1, 0
        i = int(np.argmin(v[:b]))
        return float(v[i]), i, b
    if v.size == 0:
        return 0.0, -1, -1
    i = int(np.argmin(v))
    return float(v[i]), i, -1
