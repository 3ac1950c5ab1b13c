"""Curvature of warped product metrics.

Closed forms for the Ricci diagonal of dr^2 + h^2 ds_n^2 + f^2 ds_m^2 and
the sectional curvatures of ds^2 + p^2 ds_q^2, plus an independent oracle
that differentiates the explicit coordinate metric numerically and runs the
Christoffel-symbol formulas.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .profiles import ProfileError, continuation, make_profile, _same_domain

GUARD = 1e-3  # collapsed-endpoint guard, as a fraction of the interval length
FD_STEP = 1e-4


class CurvatureError(ValueError):
    pass


class BoundaryEvaluation(CurvatureError):
    def __init__(self, point, end):
        self.point, self.end = point, end
        super().__init__(f"r={point} lies within the collapse guard of the endpoint {end}")


class StepTooLarge(CurvatureError):
    pass


@dataclass
class WarpedMetric:
    """dr^2 + h^2 ds_n^2 + f^2 ds_m^2 (doubly) or ds^2 + p^2 ds_q^2 (singly)."""
    kind: str
    h: object = None
    f: object = None
    n: int = 0
    m: int = 0
    p: object = None
    q: int = 0
    markers: dict = field(default_factory=dict)
    rho: float = None

    def __post_init__(self):
        if self.kind == "doubly-warped":
            if self.h is None or self.f is None:
                raise CurvatureError("doubly warped metric needs h and f")
            if not _same_domain(self.h.domain, self.f.domain):
                raise CurvatureError("h and f live on different intervals")
            if int(self.n) != self.n or int(self.m) != self.m or self.n < 1 or self.m < 1:
                raise CurvatureError("fiber dimensions must be positive integers")
            self.n, self.m = int(self.n), int(self.m)
        elif self.kind == "singly-warped":
            if self.p is None:
                raise CurvatureError("singly warped metric needs p")
            if int(self.q) != self.q or self.q < 1:
                raise CurvatureError("fiber dimension must be a positive integer")
            self.q = int(self.q)
        else:
            raise CurvatureError(f"unknown metric kind {self.kind!r}")
        keys = [k for k in ("R1", "R2", "R3") if k in self.markers]
        vals = [float(self.markers[k]) for k in keys]
        a, b = self.interval
        chain = [a] + vals + [b]
        if any(not x < y for x, y in zip(chain, chain[1:])):
            raise CurvatureError(f"markers must satisfy 0 < R1 < R2 < R3 < R, got {dict(zip(keys, vals))}")

    @property
    def interval(self):
        prof = self.h if self.kind == "doubly-warped" else self.p
        return prof.a, prof.b

    @property
    def R(self):
        a, b = self.interval
        return b - a

    def profiles(self):
        if self.kind == "doubly-warped":
            return {"h": self.h, "f": self.f}
        return {"p": self.p}

    def dims(self):
        return (self.n, self.m) if self.kind == "doubly-warped" else (self.q,)

    def collapsed_ends(self, tol=1e-12):
        a, b = self.interval
        ends = set()
        for prof in self.profiles().values():
            for e in (a, b):
                if abs(prof(e)) <= tol:
                    ends.add(e)
        return sorted(ends)

    def guarded_interval(self):
        """Interval shrunk by the collapse guard at collapsing ends."""
        a, b = self.interval
        eps = GUARD * (b - a)
        ends = self.collapsed_ends()
        return (a + eps if a in ends else a, b - eps if b in ends else b)

    def to_json(self):
        out = {"kind": self.kind, "markers": {k: float(v) for k, v in sorted(self.markers.items())}}
        if self.rho is not None:
            out["rho"] = float(self.rho)
        if self.kind == "doubly-warped":
            out.update({"n": self.n, "m": self.m, "h": self.h.to_json(), "f": self.f.to_json()})
        else:
            out.update({"q": self.q, "p": self.p.to_json()})
        return out

    @classmethod
    def from_json(cls, d):
        kind = d["kind"]
        markers = {k: float(v) for k, v in d.get("markers", {}).items()}
        if kind == "doubly-warped":
            return cls(kind, h=make_profile(d["h"]), f=make_profile(d["f"]), n=d["n"], m=d["m"],
                       markers=markers, rho=d.get("rho"))
        if kind == "singly-warped":
            return cls(kind, p=make_profile(d["p"]), q=d["q"], markers=markers)
        raise ProfileError(f"unknown metric kind {kind!r}")


def doubly_warped(h, f, n, m, markers=None, rho=None):
    return WarpedMetric("doubly-warped", h=h, f=f, n=n, m=m, markers=dict(markers or {}), rho=rho)


def singly_warped(p, q):
    return WarpedMetric("singly-warped", p=p, q=q)


@dataclass(frozen=True)
class RicciDiagonal:
    ric_rr: object
    ric_hh: object
    ric_ff: object

    def as_tuple(self):
        return (self.ric_rr, self.ric_hh, self.ric_ff)

    def min(self):
        return min(float(np.min(x)) for x in self.as_tuple())


def _guard(g, r):
    a, b = g.interval
    eps = GUARD * (b - a)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    for e in g.collapsed_ends():
        bad = np.abs(r_arr - e) < eps
        if bad.any():
            raise BoundaryEvaluation(float(r_arr[bad][0]), e)
    if np.any(r_arr < a) or np.any(r_arr > b):
        raise CurvatureError(f"points outside [{a}, {b}]")


def ricci_from_derivs(h, f, n, m):
    """Ricci diagonal from (value, d1, d2) triples; the vectorized core."""
    return kernels.ricci_dw(h, f, n, m)


def ricci_doubly_warped(g, r, guard=True):
    """Unit-frame Ricci diagonal (rr, sphere-n, sphere-m) at r."""
    if g.kind != "doubly-warped":
        raise CurvatureError("needs a doubly warped metric")
    if guard:
        _guard(g, r)
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = ricci_from_derivs(g.h.derivs(r), g.f.derivs(r), g.n, g.m)
    if scalar:
        return RicciDiagonal(*(float(x[0]) for x in out))
    return RicciDiagonal(*out)


def sectional_from_derivs(p):
    v, d1, d2 = p
    return -d2 / v, (1.0 - d1 * d1) / (v * v)


def sectional_singly_warped(g, s, guard=True):
    """(K_radial, K_fiber) of ds^2 + p^2 ds_q^2 at s."""
    if g.kind != "singly-warped":
        raise CurvatureError("needs a singly warped metric")
    if guard:
        _guard(g, s)
    kr, kf = sectional_from_derivs(g.p.derivs(s))
    if np.ndim(s) == 0:
        return float(kr), float(kf)
    return kr, kf


# ---- finite-difference oracle ----

def sphere_angles(k, start=0.0):
    """A generic point in nested spherical angles for S^k."""
    return [1.1 + 0.17 * j + start for j in range(k)]


def round_sphere_diag(angles):
    """Diagonal of the unit round metric in nested angles, batched.
    angles: (N, k). Returns (N, k)."""
    N, k = angles.shape
    out = np.ones((N, k))
    s2 = np.sin(angles) ** 2
    for j in range(1, k):
        out[:, j] = out[:, j - 1] * s2[:, j - 1]
    return out


def warped_metric_fn(g, at=None):
    """Coordinate metric X (N, D) -> (N, D, D) for the warped metric, using
    only profile values. With at=r the profiles are replaced by their
    continuations from the piece holding r."""
    if g.kind == "doubly-warped":
        n, m = g.n, g.m
        h, f = (g.h, g.f) if at is None else (continuation(g.h, at), continuation(g.f, at))

        def metric(X):
            r = X[:, 0]
            hv, fv = h(r), f(r)
            diag = np.empty((X.shape[0], 1 + n + m))
            diag[:, 0] = 1.0
            diag[:, 1:1 + n] = (hv ** 2)[:, None] * round_sphere_diag(X[:, 1:1 + n])
            diag[:, 1 + n:] = (fv ** 2)[:, None] * round_sphere_diag(X[:, 1 + n:])
            return _diag_to_full(diag)
        dim = 1 + n + m
    else:
        q = g.q
        p = g.p if at is None else continuation(g.p, at)

        def metric(X):
            pv = p(X[:, 0])
            diag = np.empty((X.shape[0], 1 + q))
            diag[:, 0] = 1.0
            diag[:, 1:] = (pv ** 2)[:, None] * round_sphere_diag(X[:, 1:])
            return _diag_to_full(diag)
        dim = 1 + q
    return metric, dim


def _diag_to_full(diag):
    N, D = diag.shape
    G = np.zeros((N, D, D))
    idx = np.arange(D)
    G[:, idx, idx] = diag
    return G


def metric_derivatives(metric, x, step, second=True):
    """Richardson-extrapolated first (and second) partials of the metric.

    Returns g (D,D), dg (D,D,D) with dg[a] = d_a g, and optionally
    ddg (D,D,D,D) with ddg[a,b] = d_a d_b g.
    """
    x = np.asarray(x, dtype=float)
    D = x.size
    E = np.eye(D)
    pts = [x]
    for hstep in (step, 2 * step):
        for a in range(D):
            pts += [x + hstep * E[a], x - hstep * E[a]]
    mixed = []
    if second:
        for hstep in (step, 2 * step):
            for a in range(D):
                for b in range(a + 1, D):
                    for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                        pts.append(x + hstep * (sa * E[a] + sb * E[b]))
                    mixed.append((hstep, a, b))
    G = metric(np.array(pts))
    g0 = G[0]
    it = 1
    first = {}
    diag2 = {}
    for hstep in (step, 2 * step):
        for a in range(D):
            gp, gm = G[it], G[it + 1]
            it += 2
            first[(hstep, a)] = (gp - gm) / (2 * hstep)
            diag2[(hstep, a)] = (gp - 2 * g0 + gm) / hstep ** 2
    dg = np.array([(4 * first[(step, a)] - first[(2 * step, a)]) / 3 for a in range(D)])
    if not second:
        return g0, dg
    cross = {}
    for hstep, a, b in mixed:
        pp, pm, mp, mm = G[it:it + 4]
        it += 4
        cross[(hstep, a, b)] = (pp - pm - mp + mm) / (4 * hstep ** 2)
    ddg = np.zeros((D, D, D, D))
    for a in range(D):
        ddg[a, a] = (4 * diag2[(step, a)] - diag2[(2 * step, a)]) / 3
        for b in range(a + 1, D):
            v = (4 * cross[(step, a, b)] - cross[(2 * step, a, b)]) / 3
            ddg[a, b] = v
            ddg[b, a] = v
    return g0, dg, ddg


def christoffel(g0, dg):
    """Gamma[k, i, j] from g and its first partials."""
    ginv = np.linalg.inv(g0)
    # A[l,i,j] = d_i g_jl + d_j g_il - d_l g_ij
    A = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, A)


def ricci_from_metric_derivs(g0, dg, ddg):
    """Coordinate Ricci tensor from g, dg, ddg."""
    ginv = np.linalg.inv(g0)
    A = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    Gam = 0.5 * np.einsum("kl,lij->kij", ginv, A)
    # dA[m,l,i,j] = d_m A[l,i,j]
    dA = np.einsum("mijl->mlij", ddg) + np.einsum("mjil->mlij", ddg) - ddg
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dGam = 0.5 * (np.einsum("mkl,lij->mkij", dginv, A) + np.einsum("kl,mlij->mkij", ginv, dA))
    term1 = np.einsum("kkij->ij", dGam)          # d_k Gamma^k_ij
    term2 = np.einsum("jkik->ij", dGam)          # d_j Gamma^k_ik
    term3 = np.einsum("kkl,lij->ij", Gam, Gam)
    term4 = np.einsum("kjl,lik->ij", Gam, Gam)
    return term1 - term2 + term3 - term4


@dataclass
class OracleResult:
    point: list
    ricci: np.ndarray          # coordinate frame
    unit: np.ndarray           # R_ij / sqrt(g_ii g_jj)
    diagonal: tuple            # (rr, sphere-n, sphere-m) or (rr, fiber)
    offdiag_max: float


def fd_ricci_oracle(g, point, step=FD_STEP):
    """Ricci tensor of the coordinate metric by numerical differentiation.

    point is r (angles are placed at a generic interior position) or a full
    coordinate vector.
    """
    r = float(point) if np.ndim(point) == 0 else float(point[0])
    metric, D = warped_metric_fn(g, at=r)
    if np.ndim(point) == 0:
        r = float(point)
        if g.kind == "doubly-warped":
            x = [r] + sphere_angles(g.n) + sphere_angles(g.m, 0.05)
        else:
            x = [r] + sphere_angles(g.q)
    else:
        x = list(point)
        r = x[0]
    a, b = g.interval
    if r - a <= 4 * step or b - r <= 4 * step:
        raise StepTooLarge(f"r={r} is within 4*step={4 * step} of an endpoint")
    g0, dg, ddg = metric_derivatives(metric, x, step)
    ric = ricci_from_metric_derivs(g0, dg, ddg)
    d = np.sqrt(np.abs(np.diag(g0)))
    unit = ric / np.outer(d, d)
    off = unit - np.diag(np.diag(unit))
    ud = np.diag(unit)
    if g.kind == "doubly-warped":
        diagonal = (ud[0], ud[1], ud[1 + g.n])
    else:
        diagonal = (ud[0], ud[1])
    return OracleResult(list(map(float, x)), ric, unit, tuple(float(v) for v in diagonal),
                        float(np.max(np.abs(off))))
