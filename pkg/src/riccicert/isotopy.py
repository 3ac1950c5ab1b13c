"""Deformation paths of warped metrics and their curvature certificates.

Stage one bends f into a concave cap f1 with h fixed; stage two moves the
concave pair (h, f1) to round profiles; the boundary isotopy moves a concave
singly warped profile to a round one.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial import Polynomial

from . import certify as cz
from .curvature import (doubly_warped, ricci_from_derivs, sectional_from_derivs, singly_warped)
from .profiles import (AnalyticProfile, PiecewisePolynomial, convex_combine, poly_profile,
                       singly_closure_specs, sphere_closure_specs, validate_closure)


class PathError(ValueError):
    pass


class HypothesisViolated(PathError):
    def __init__(self, condition, witness=None, value=None):
        self.condition, self.witness, self.value = condition, witness, value
        super().__init__(f"hypothesis violated: {condition}"
                         + ("" if witness is None else f" at {witness} (value {value})"))


class InfeasibleCap(PathError):
    def __init__(self, constraint):
        self.constraint = constraint
        super().__init__(f"no concave cap: {constraint}")


GRID = 512
LAM_GRID = 64


# ---- hypothesis checks ----

def _interior(a, b, n=GRID):
    return np.linspace(a, b, n + 2)[1:-1]


def require_sign(prof, order, a, b, sign, what, n=GRID):
    """Grid check that the order-th derivative has the given strict sign on (a, b)."""
    r = _interior(a, b, n)
    v = prof.derivs(r)[order]
    bad = np.flatnonzero(~(sign * v > 0))
    if bad.size:
        i = int(bad[0])
        raise HypothesisViolated(what, float(r[i]), float(v[i]))


def require_const(prof, a, b, value, what, tol=1e-9, n=GRID):
    r = np.linspace(a, b, n)
    v = prof(r)
    bad = np.flatnonzero(np.abs(v - value) > tol)
    if bad.size:
        i = int(bad[0])
        raise HypothesisViolated(what, float(r[i]), float(v[i]))


# ---- concave cap ----

def _cap_from_kappa(breaks, kappas):
    """f1 with f1'' = -kappa (piecewise polynomial in r), f1(R) = 0,
    f1'(R) = -1, integrating from the right end."""
    polys = [None] * len(kappas)
    val, slope = 0.0, -1.0
    for i in range(len(kappas) - 1, -1, -1):
        x1 = breaks[i + 1]
        d1 = (-kappas[i]).integ()
        d1 = d1 + (slope - d1(x1))
        f = d1.integ()
        f = f + (val - f(x1))
        polys[i] = f
        x0 = breaks[i]
        val, slope = f(x0), d1(x0)
    return poly_profile(breaks, polys)


def _quartic_cap(R, R1, F):
    """t + a t^3 + b t^4, t = R - r: closes at R, f1'(0) = 0, f1(R1) = F."""
    t1 = R - R1
    A = np.array([[3 * R ** 2, 4 * R ** 3], [t1 ** 3, t1 ** 4]])
    rhs = np.array([-1.0, F - t1])
    a, b = np.linalg.solve(A, rhs)
    t = Polynomial([R, -1.0])
    poly = t + a * t ** 3 + b * t ** 4
    return poly_profile([0.0, R], [poly])


def _hat(lo, hi):
    """Degree-4 bump vanishing to first order at lo and hi, peak 1."""
    w = hi - lo
    return (Polynomial([-lo, 1.0]) * Polynomial([hi, -1.0])) ** 2 * (16.0 / w ** 4)


def _spline_caps(R, R1, F):
    """kappa = alpha (R - v) + beta * hat on a window; alpha, beta from the
    mass (f1'(0) = 0) and moment (f1(R1) = F) conditions."""
    lin = Polynomial([R, -1.0])
    windows = []
    for j in range(9):
        w = (R - R1) / 2 ** j
        windows.append((R - w, R))
    for j in range(1, 9):
        w = R1 / 2 ** (j - 1)
        windows.append((0.0, w))
    for lo, hi in windows:
        hat = _hat(lo, hi)
        mom_w = Polynomial([-R1, 1.0])

        def mass(p, a, b):
            q = p.integ()
            return q(b) - q(a)

        def moment(p, a, b):
            a, b = max(a, R1), max(b, R1)
            q = (mom_w * p).integ()
            return q(b) - q(a)
        M = np.array([[mass(lin, 0, R), mass(hat, lo, hi)],
                      [moment(lin, 0, R), moment(hat, lo, hi)]])
        try:
            alpha, beta = np.linalg.solve(M, [1.0, (R - R1) - F])
        except np.linalg.LinAlgError:
            continue
        if not (alpha > 0 and beta >= 0):
            continue
        cuts = sorted({0.0, lo, hi, R})
        kap = []
        for x0, x1 in zip(cuts, cuts[1:]):
            k = alpha * lin
            if lo <= x0 and x1 <= hi:
                k = k + beta * hat
            kap.append(k)
        yield _cap_from_kappa(cuts, kap)


def _cap_ok(cap, R, R1, F, tol=1e-9):
    r = _interior(0.0, R)
    d2 = cap.derivs(r)[2]
    return (cap(0.0) > 0 and abs(cap.derivs(0.0)[1]) <= tol and abs(cap(R)) <= tol
            and abs(cap.derivs(R)[1] + 1) <= tol and abs(cap(R1) - F) <= tol * max(1.0, F)
            and bool(np.all(d2 < 0)))


def build_concave_cap(f, R1, R=None):
    """A concave f1 on [0, R] with the closure data of f at R, f1'(0) = 0 and
    f1(R1) = f(R1). Candidates in order: the round profile (2R/pi) cos if it
    already fits, the quartic in R - r, then concave splines."""
    R = float(f.b) if R is None else float(R)
    F = float(f(R1))
    if not F > 0:
        raise InfeasibleCap(f"f(R1) = {F} must be positive")
    if not F < R - R1:
        raise InfeasibleCap(f"f(R1) = {F} must lie below the tangent line R - R1 = {R - R1}")
    a = 2 * R / math.pi
    round_cap = AnalyticProfile("cos", {"amplitude": a, "frequency": 1 / a}, (0.0, R))
    if abs(round_cap(R1) - F) <= 1e-12 * max(1.0, F):
        return round_cap
    quart = _quartic_cap(R, R1, F)
    if _cap_ok(quart, R, R1, F):
        return quart
    for cap in _spline_caps(R, R1, F):
        if _cap_ok(cap, R, R1, F):
            return cap
    raise InfeasibleCap(f"no quartic or windowed spline is concave with f1(R1) = {F}")


# ---- paths ----

@dataclass
class MetricPath:
    """Convex-combination path between stored endpoint profiles."""
    base: object
    lam: tuple
    stage: str
    ends: dict   # name -> (profile at lam[0], profile at lam[1])
    variant: str = ""

    def _t(self, lam):
        lo, hi = self.lam
        return (lam - lo) / (hi - lo)

    def profiles_at(self, lam):
        lo, hi = self.lam
        out = {}
        for name, (p0, p1) in self.ends.items():
            if lam == lo:
                out[name] = p0
            elif lam == hi:
                out[name] = p1
            else:
                out[name] = convex_combine(p0, p1, self._t(lam))
        return out

    def metric_at(self, lam):
        pr = self.profiles_at(lam)
        if self.base.kind == "doubly-warped":
            return doubly_warped(pr["h"], pr["f"], self.base.n, self.base.m,
                                 markers=self.base.markers, rho=self.base.rho)
        return singly_warped(pr["p"], self.base.q)

    def components(self):
        if self.base.kind == "doubly-warped":
            return ("ric_rr", "ric_hh", "ric_ff")
        return ("K_radial", "K_fiber")

    def field(self, component):
        names = self.components()
        idx = names.index(component)
        lo = self.lam[0]
        span = self.lam[1] - self.lam[0]
        ends = self.ends
        kind = self.base.kind
        dims = self.base.dims()

        def fn(r, lam):
            r = np.asarray(r, dtype=float)
            t = (np.asarray(lam, dtype=float) - lo) / span
            r, t = np.broadcast_arrays(r, t)
            comb = {}
            for name, (p0, p1) in ends.items():
                if p0 is p1:
                    comb[name] = p0.derivs(r)
                else:
                    a = p0.derivs(r)
                    b = p1.derivs(r)
                    comb[name] = tuple((1 - t) * x + t * y for x, y in zip(a, b))
            if kind == "doubly-warped":
                return ricci_from_derivs(comb["h"], comb["f"], *dims)[idx]
            return sectional_from_derivs(comb["p"])[idx]
        return fn

    def closure_reports(self, lams):
        out = []
        for lam in lams:
            pr = self.profiles_at(lam)
            if self.base.kind == "doubly-warped":
                specs = sphere_closure_specs(pr["h"].domain)
                reps = [validate_closure(pr[k], s) for k in ("h", "f") for s in specs[k]]
            else:
                reps = [validate_closure(pr["p"], s) for s in singly_closure_specs(pr["p"].domain)]
            out.append((lam, reps))
        return out

    def to_json(self):
        return {"stage": self.stage, "lambda": [float(x) for x in self.lam], "variant": self.variant,
                "base": self.base.to_json(),
                "endpoints": {k: [p0.to_json(), p1.to_json()] for k, (p0, p1) in sorted(self.ends.items())}}


@dataclass
class PathCertificate:
    stage: str
    components: dict = field(default_factory=dict)

    @property
    def verdict(self):
        vs = [c.verdict for c in self.components.values()]
        if cz.FALSIFIED in vs:
            return cz.FALSIFIED
        if all(v == cz.VERIFIED for v in vs):
            return cz.VERIFIED
        if all(v == cz.GRID_POSITIVE for v in vs):
            return cz.GRID_POSITIVE
        return cz.INCONCLUSIVE

    def to_json(self):
        return {"stage": self.stage, "verdict": self.verdict,
                "components": {k: c.to_json() for k, c in sorted(self.components.items())}}


def stage_one_path(g):
    """h fixed, f_lam = (1 - lam) f + lam f1 with f1 the concave cap."""
    if g.kind != "doubly-warped":
        raise HypothesisViolated("a doubly warped metric is required")
    for key in ("R1", "R2"):
        if key not in g.markers:
            raise HypothesisViolated(f"marker {key} is missing")
    a, R = g.interval
    R1, R2 = float(g.markers["R1"]), float(g.markers["R2"])
    rho = float(g.rho) if g.rho is not None else float(g.h(R))
    require_sign(g.f, 2, a, R1, +1, "f'' > 0 on (0, R1)")
    require_sign(g.f, 2, R1, R, -1, "f'' < 0 on (R1, R)")
    require_sign(g.h, 2, a, R2, -1, "h'' < 0 on (0, R2)")
    require_const(g.h, R2, R, rho, "h = rho on [R2, R]")
    cap = build_concave_cap(g.f, R1, R)
    return MetricPath(g, (0.0, 1.0), "one", {"h": (g.h, g.h), "f": (g.f, cap)})


def round_profiles(R, variant="closure"):
    """Round targets on [0, R]. 'closure' uses radius 2R/pi so the profiles
    close up smoothly; 'uncorrected' uses radius R."""
    a = 2 * R / math.pi if variant == "closure" else R
    if variant not in ("closure", "uncorrected"):
        raise PathError(f"unknown variant {variant!r}")
    dom = (0.0, R)
    return (AnalyticProfile("sin", {"amplitude": a, "frequency": 1 / a}, dom),
            AnalyticProfile("cos", {"amplitude": a, "frequency": 1 / a}, dom))


def stage_two_path(g, variant="closure"):
    """From a concave pair (h, f) to round profiles over lam in [1, 2]."""
    if g.kind != "doubly-warped":
        raise HypothesisViolated("a doubly warped metric is required")
    a, R = g.interval
    r = _interior(a, R)
    hv = g.h.derivs(r)[2]
    bad = np.flatnonzero(hv > 1e-12)
    if bad.size:
        raise HypothesisViolated("h'' <= 0 (concave, possibly constant)", float(r[bad[0]]), float(hv[bad[0]]))
    require_sign(g.f, 2, a, R, -1, "f'' < 0 on (0, R)")
    h2, f2 = round_profiles(R, variant)
    return MetricPath(g, (1.0, 2.0), "two", {"h": (g.h, h2), "f": (g.f, f2)}, variant)


def connect_boundary_path(p, q, variant="corrected"):
    """p_lam = (1 - lam) p + lam * target on [0, S]; target (S/pi) sin(pi s/S)
    (unit end slopes) or, uncorrected, S sin(pi s/S)."""
    S = p.b
    if abs(p.a) > 0:
        raise HypothesisViolated("profile must start at s = 0")
    for spec in singly_closure_specs(p.domain):
        rep = validate_closure(p, spec, tol=1e-8)
        if not rep.passed:
            bad = next(c for c in rep.checks if not c["passed"])
            raise HypothesisViolated(f"closure ({spec.role}, order {bad['order']})", bad["point"], bad["measured"])
    require_sign(p, 2, 0.0, S, -1, "p'' < 0 on (0, S)")
    amp = S / math.pi if variant == "corrected" else S
    if variant not in ("corrected", "uncorrected"):
        raise PathError(f"unknown variant {variant!r}")
    target = AnalyticProfile("sin", {"amplitude": amp, "frequency": math.pi / S}, (0.0, S))
    return MetricPath(singly_warped(p, q), (0.0, 1.0), "boundary-isotopy", {"p": (p, target)}, variant)


def path_boxes(path, splits=()):
    a, b = path.base.guarded_interval()
    cuts = [a] + sorted({float(x) for x in splits if a < x < b}) + [b]
    return [[(x0, x1), tuple(path.lam)] for x0, x1 in zip(cuts, cuts[1:])]


def certify_path(path, grid=(GRID, LAM_GRID), mode="certified", threads=None, max_depth=14, splits=None):
    """Certify every curvature component positive over the (r, lam) box,
    split at the structure markers."""
    if splits is None:
        splits = [float(v) for v in path.base.markers.values()]
        for prof in path.base.profiles().values():
            splits += list(getattr(prof, "breaks", ()))
    boxes = path_boxes(path, splits)
    cert = PathCertificate(path.stage)
    for comp in path.components():
        cert.components[comp] = cz.certify_boxes(path.field(comp), boxes, list(grid), mode,
                                                 claim=f"{comp} > 0 along stage {path.stage}",
                                                 threads=threads, max_depth=max_depth)
    return cert


def certify_metric(g, grid=GRID, mode="certified", threads=None, max_depth=14, claim_prefix="", splits=()):
    """Certify the Ricci diagonal (or sectional pair) of a single metric."""
    path = MetricPath(g, (0.0, 1.0), "fixed",
                      {k: (v, v) for k, v in g.profiles().items()})
    splits = [float(v) for v in g.markers.values()] + [float(v) for v in splits]
    for prof in g.profiles().values():
        splits += list(getattr(prof, "breaks", ()))
    a, b = g.guarded_interval()
    cuts = [a] + sorted(x for x in set(splits) if a < x < b) + [b]
    out = PathCertificate("fixed")
    for comp in path.components():
        fn = path.field(comp)
        out.components[comp] = cz.certify_boxes(lambda r, fn=fn: fn(r, 0.0),
                                                [[(x0, x1)] for x0, x1 in zip(cuts, cuts[1:])],
                                                [grid], mode, claim=f"{claim_prefix}{comp} > 0",
                                                threads=threads, max_depth=max_depth)
    return out


def monotonicity_defect(path, r_max, grid=(GRID, LAM_GRID)):
    """max over r <= r_max of the decrease of ric_rr between consecutive lam
    nodes (0 when ric_rr is non-decreasing in lam at every grid r)."""
    a, _ = path.base.guarded_interval()
    r = np.linspace(a, r_max, grid[0])
    lam = np.linspace(path.lam[0], path.lam[1], grid[1])
    R_, L_ = np.meshgrid(r, lam, indexing="ij")
    v = path.field("ric_rr")(R_, L_)
    drop = v[:, :-1] - v[:, 1:]
    i = np.unravel_index(int(np.argmax(drop)), drop.shape)
    return max(0.0, float(drop[i])), (float(r[i[0]]), float(lam[i[1]]))
