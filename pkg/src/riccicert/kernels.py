"""Backend selection for the hot kernels.

The compiled module is used when it imports; setting RICCICERT_PURE_PYTHON=1
forces the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

_compiled = None
if not os.environ.get("RICCICERT_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

_active = _compiled if _compiled is not None else _kernels_py
BACKEND = "compiled" if _compiled is not None else "python"


def available_backends():
    return ["compiled", "python"] if _compiled is not None else ["python"]


def use_backend(name):
    """Switch the active backend; returns the previous name."""
    global _active, BACKEND
    prev = BACKEND
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _compiled
    elif name == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    return prev


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def pp_eval(breaks, coeffs, r):
    r = np.asarray(r, dtype=np.float64)
    shape = r.shape
    v, d1, d2 = _active.pp_eval(_f64(breaks), _f64(coeffs), _f64(r.ravel()))
    return (np.asarray(v).reshape(shape), np.asarray(d1).reshape(shape),
            np.asarray(d2).reshape(shape))


def ricci_dw(h, f, n, m):
    """h and f are (value, d1, d2) triples of equal-shape arrays."""
    shape = np.shape(h[0])
    args = [_f64(np.broadcast_to(a, shape)).ravel() for a in (*h, *f)]
    out = _active.ricci_dw(*args, int(n), int(m))
    return tuple(np.asarray(o).reshape(shape) for o in out)


def min_reduce(values):
    v, i, bad = _active.min_reduce(_f64(values).ravel())
    return float(v), int(i), int(bad)
