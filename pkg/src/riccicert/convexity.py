"""Hypersurfaces x = xi(r) in dr^2 + h^2 ds_n^2 + f^2 (dx^2 + sin^2 x ds_{m-2}^2).

x is the colatitude on the S^{m-1} fiber. The region Disk(xi) = {x <= xi(r)}
has outward normal pointing toward increasing x, and a principal curvature
is counted positive when the region is convex in that direction.

The boundary profile xi is constant c up to r_p = R - pi/4, then follows a
C^2 blend whose meridian curve has nonnegative geodesic curvature, and
finally agrees with the boundary of a geodesic ball of the round region,
which closes the hypersurface on the axis x = 0.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog

from . import certify as cz
from .curvature import (doubly_warped, metric_derivatives, christoffel, round_sphere_diag, sphere_angles,
                        ricci_doubly_warped, ricci_from_metric_derivs)
from .profiles import PiecewisePolynomial, WarpProfile


class ConvexityError(ValueError):
    pass


class SingularNormal(ConvexityError):
    pass


class BlockMismatch(ConvexityError):
    pass


class BoundaryNotRound(ConvexityError):
    def __init__(self, deviation):
        self.deviation = deviation
        super().__init__(f"boundary deviates from the unit round sphere by {deviation:.3e}")


class InfeasibleBlend(ConvexityError):
    pass


BLOCKS = ("tangent", "sphere_n", "sphere_m2")
SOCKET_SCHEDULE = tuple(2.0 ** -k for k in range(11))


# ---- geodesic-ball boundary in the round region ----

@dataclass(frozen=True)
class BallCurve:
    """Boundary of the geodesic ball of radius a centered on the axis x = 0
    at distance d1 from the pole r = R, in polar coordinates (d = R - r, x)
    of the unit round sphere."""
    R: float
    d1: float
    a: float

    @property
    def d_near(self):
        return self.d1 - self.a

    @property
    def d_widest(self):
        return math.acos(min(1.0, math.cos(self.d1) / math.cos(self.a)))

    @property
    def max_angle(self):
        return math.asin(math.sin(self.a) / math.sin(self.d1))

    def xi_d(self, d):
        """xi and its first two d-derivatives along the near arc."""
        d = np.asarray(d, dtype=float)
        A, C1, S1 = math.cos(self.a), math.cos(self.d1), math.sin(self.d1)
        sd, cd = np.sin(d), np.cos(d)
        u = (A - C1 * cd) / (S1 * sd)
        u1 = (C1 - A * cd) / (S1 * sd ** 2)
        u2 = (A * sd ** 2 - 2 * cd * (C1 - A * cd)) / (S1 * sd ** 3)
        w = np.sqrt(np.maximum(1 - u * u, 0.0))
        x = np.arccos(np.clip(u, -1, 1))
        x1 = -u1 / w
        x2 = -u2 / w - u * u1 ** 2 / w ** 3
        return x, x1, x2

    def xi_r(self, r):
        x, x1, x2 = self.xi_d(self.R - np.asarray(r, dtype=float))
        return x, -x1, x2

    def center_angle(self, d):
        """Angle at the ball center between the pole direction and the
        boundary point at distance d from the pole."""
        v = (math.cos(d) - math.cos(self.d1) * math.cos(self.a)) / (math.sin(self.d1) * math.sin(self.a))
        return math.acos(max(-1.0, min(1.0, v)))


# ---- xi profile ----

class XiProfile(WarpProfile):
    """Plateau, blend and ball pieces of the boundary profile."""

    kind = "xi"

    def __init__(self, c, R, r_p, blend, ball, r_join):
        self.c, self.R, self.r_p = float(c), float(R), float(r_p)
        self.blend, self.ball, self.r_join = blend, ball, float(r_join)
        self.r_end = self.R - ball.d_near
        super().__init__((0.0, self.r_end))

    def region(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_p, 0, np.where(r <= self.r_join, 1, 2))

    def _derivs(self, r):
        r = np.asarray(r, dtype=float)
        v = np.full(r.shape, self.c)
        d1 = np.zeros(r.shape)
        d2 = np.zeros(r.shape)
        reg = self.region(r)
        m1 = reg == 1
        if m1.any():
            bv = self.blend.derivs(r[m1])
            v[m1], d1[m1], d2[m1] = bv
        m2 = reg == 2
        if m2.any():
            bv = self.ball.xi_r(r[m2])
            v[m2], d1[m2], d2[m2] = bv
        return v, d1, d2

    def join_defect(self):
        left = self.blend.derivs(self.r_join)
        right = tuple(float(x) for x in self.ball.xi_r(self.r_join))
        return max(abs(x - y) for x, y in zip(left, right))

    def to_json(self):
        return {"kind": "xi", "c": self.c, "R": self.R, "plateau_end": self.r_p,
                "join": self.r_join, "end": self.r_end, "blend": self.blend.to_json(),
                "ball": {"center_distance": self.ball.d1, "radius": self.ball.a}}


def _kappa_tables(knots, samples):
    """Linear maps from knot values of a piecewise linear kappa to:
    kappa(samples), int_{k0}^{v} kappa (at samples), total mass and the
    moment int (k_end - v) kappa dv."""
    K = len(knots)
    k_end = knots[-1]
    val = np.zeros((len(samples), K))
    cum = np.zeros((len(samples), K))
    for s, v in enumerate(samples):
        j = min(max(int(np.searchsorted(knots, v, side="right")) - 1, 0), K - 2)
        h = knots[j + 1] - knots[j]
        tau = v - knots[j]
        val[s, j] = 1 - tau / h
        val[s, j + 1] = tau / h
        for i in range(j):
            hi = knots[i + 1] - knots[i]
            cum[s, i] += hi / 2
            cum[s, i + 1] += hi / 2
        cum[s, j] += tau - tau * tau / (2 * h)
        cum[s, j + 1] += tau * tau / (2 * h)
    mass = np.zeros(K)
    mom = np.zeros(K)
    for i in range(K - 1):
        h = knots[i + 1] - knots[i]
        mass[i] += h / 2
        mass[i + 1] += h / 2
        mom[i] += h * ((k_end - knots[i]) / 2 - h / 6)
        mom[i + 1] += h * ((k_end - knots[i]) / 2 - h / 3)
    return val, cum, mass, mom


def _blend_profile(knots, kap, c):
    """xi on [knots[0], knots[-1]] with xi = c, xi' = 0 at the left end and
    xi'' = -kappa piecewise linear: a C^2 piecewise cubic."""
    pieces = []
    x, s = c, 0.0
    for j in range(len(knots) - 1):
        h = knots[j + 1] - knots[j]
        k0, k1 = kap[j], kap[j + 1]
        pieces.append([x, s, -k0 / 2, -(k1 - k0) / (6 * h)])
        x = x + s * h - k0 * h * h / 2 - (k1 - k0) * h * h / 6
        s = s - (k0 + k1) * h / 2
    return PiecewisePolynomial(list(knots), pieces, tol=1e-7)


def geodesic_curvature_numerator(f_derivs, xi_derivs):
    """-(xi'' + f f' xi'^3 + 2 f' xi'/f): the sign of the tangent principal
    curvature of the graph x = xi(r)."""
    f0, f1, _ = f_derivs
    _, x1, x2 = xi_derivs
    return -(x2 + f0 * f1 * x1 ** 3 + 2 * f1 * x1 / f0)


def build_xi(g, c, d1=0.36, size=0.8, join=0.5, knots=24, samples=400, iterations=12):
    """Construct the boundary profile for the ambient metric g.

    The ball has radius a with sin(a) = size sin(c) sin(d1), so its widest
    angle seen from the pole is below c. The join sits at fraction `join`
    between the ball's near point and min(widest point, pi/8). The blend is
    found by a sequence of linear programs in the knot values of kappa =
    -xi'': match value, slope and kappa at the join, keep the meridian
    geodesic curvature nonnegative, and maximize its weighted minimum.
    """
    R = g.R
    if not 0 < c < math.pi / 2:
        raise InfeasibleBlend(f"c={c} must lie in (0, pi/2)")
    r_p = R - math.pi / 4
    a = math.asin(size * math.sin(c) * math.sin(d1))
    ball = BallCurve(R, d1, a)
    d_e = ball.d_near
    d_top = min(ball.d_widest, math.pi / 8)
    if not d_e < d_top:
        raise InfeasibleBlend("the ball does not reach into the cap window")
    d_j = d_e + join * (d_top - d_e)
    r_j = R - d_j
    if not r_j > r_p:
        raise InfeasibleBlend("join lies inside the plateau")
    xb, xb1, xb2 = (float(v) for v in ball.xi_r(r_j))
    kj, M, mom = -xb2, -xb1, c - xb
    if not (kj > 0 and M > 0 and mom > 0):
        raise InfeasibleBlend("ball arc is not descending and concave at the join")
    ell = min(0.25 * M / kj, (r_j - r_p) / (2 * knots))
    kn = np.r_[np.linspace(r_p, r_j - ell, knots + 1), r_j]
    sm = np.linspace(r_p, r_j, samples + 1)[1:]
    val, cum, mass, momv = _kappa_tables(kn, sm)
    fv, fd1, _ = g.f.derivs(sm)
    weight = (sm - r_p) / (r_j - r_p)
    K = len(kn)
    slope_guess = np.zeros(len(sm))
    best = None
    for _ in range(iterations):
        # G = kappa - f f' xi'^3 - 2 f' xi'/f with xi' = -cum @ kappa, cubic linearized
        lin_cubic = 3 * slope_guess ** 2
        const_cubic = -2 * slope_guess ** 3
        # xi'^3 ~ lin_cubic * xi' + const_cubic
        coef_slope = -(fv * fd1 * lin_cubic) - 2 * fd1 / fv
        Gmat = val + coef_slope[:, None] * (-cum)
        Gconst = -(fv * fd1 * const_cubic)
        # Gmat k + Gconst >= t * weight  ->  -Gmat k + weight t <= Gconst
        A_ub = np.hstack([-Gmat, weight[:, None]])
        b_ub = Gconst
        A_eq = np.zeros((4, K + 1))
        A_eq[0, :K] = mass
        A_eq[1, :K] = momv
        A_eq[2, 0] = 1
        A_eq[3, K - 1] = 1
        b_eq = [M, mom, 0.0, kj]
        res = linprog(np.r_[np.zeros(K), -1.0], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=[(0, None)] * K + [(None, None)], method="highs")
        if res.status != 0:
            break
        kap = _exact_moments(res.x[:K], mass, momv, M, mom)
        if kap is None:
            break
        slope = -cum @ kap
        G = val @ kap - fv * fd1 * slope ** 3 - 2 * fd1 * slope / fv
        score = float(np.min(G / weight))
        if best is None or score > best[0]:
            best = (score, kap)
        if np.max(np.abs(slope - slope_guess)) < 1e-12:
            break
        slope_guess = slope
    if best is None or best[0] <= 0:
        raise InfeasibleBlend(f"no blend with nonnegative geodesic curvature for c={c}")
    blend = _blend_profile(kn, best[1], c)
    return XiProfile(c, R, r_p, blend, ball, r_j)


def _exact_moments(kap, mass, momv, M, mom):
    """Adjust two interior knot values so mass and moment hold to rounding."""
    kap = np.array(kap, dtype=float)
    K = len(kap)
    for i, j in ((K // 3, 2 * K // 3), (1, K - 2), (K // 2, K // 2 + 1)):
        A = np.array([[mass[i], mass[j]], [momv[i], momv[j]]])
        rhs = np.array([M - mass @ kap, mom - momv @ kap])
        try:
            dx = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        trial = kap.copy()
        trial[i] += dx[0]
        trial[j] += dx[1]
        if trial.min() >= 0:
            return trial
    return None


# ---- second fundamental form ----

@dataclass
class SFFBlocks:
    tangent: object
    sphere_n: object
    sphere_m2: object

    def as_dict(self):
        return {"tangent": self.tangent, "sphere_n": self.sphere_n, "sphere_m2": self.sphere_m2}

    def min(self):
        return min(float(np.min(v)) for v in self.as_dict().values())


def sff_graph(h, f, xi):
    """Principal curvature blocks of x = xi(r) from (value, d1, d2) triples."""
    h0, h1, _ = h
    f0, f1, _ = f
    x0, x1, x2 = xi
    N = np.sqrt(x1 ** 2 + 1 / f0 ** 2)
    nu_r = -x1 / N
    with np.errstate(divide="ignore", invalid="ignore"):
        sph_n = np.where(nu_r == 0, 0.0, nu_r * h1 / h0)
    sph_m2 = (-x1 * f1 / f0 + np.cos(x0) / (np.sin(x0) * f0 ** 2)) / N
    tang = geodesic_curvature_numerator(f, xi) / (N * (1 + f0 ** 2 * x1 ** 2))
    return SFFBlocks(tang, sph_n, sph_m2)


def second_fundamental_form(g, xi, r):
    """Principal-curvature blocks (tangent, sphere-n, sphere-(m-2)) at r.

    In the plateau the closed form (0, 0, cot(c)/f) is returned exactly."""
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r >= xi.r_end) or np.any(r < xi.a):
        raise SingularNormal("the graph normal degenerates at the closing point")
    fv = g.f.derivs(r)
    blocks = sff_graph(g.h.derivs(r), fv, xi.derivs(r))
    plate = xi.region(r) == 0
    if plate.any():
        for name in ("tangent", "sphere_n"):
            getattr(blocks, name)[plate] = 0.0
        blocks.sphere_m2[plate] = (math.cos(xi.c) / math.sin(xi.c)) / fv[0][plate]
    if scalar:
        return SFFBlocks(float(blocks.tangent[0]), float(blocks.sphere_n[0]), float(blocks.sphere_m2[0]))
    return blocks


def ambient_metric_fn(g):
    """Coordinates (r, theta_1..theta_n, x, phi_1..phi_{m-2}) of the ambient
    metric, fiber S^{m-1} written with colatitude x."""
    n, mm = g.n, g.m - 1

    def metric(X):
        r = X[:, 0]
        hv, fv = g.h(r), g.f(r)
        D = X.shape[1]
        diag = np.empty((X.shape[0], D))
        diag[:, 0] = 1.0
        diag[:, 1:1 + n] = (hv ** 2)[:, None] * round_sphere_diag(X[:, 1:1 + n])
        diag[:, 1 + n] = fv ** 2
        if mm > 0:
            diag[:, 2 + n:] = (fv ** 2 * np.sin(X[:, 1 + n]) ** 2)[:, None] * round_sphere_diag(X[:, 2 + n:])
        G = np.zeros((X.shape[0], D, D))
        idx = np.arange(D)
        G[:, idx, idx] = diag
        return G
    return metric, 2 + n + mm


def fd_shape_operator(g, xi_fn, r, step=1e-4):
    """Independent oracle: II = Hess F / |grad F| with F = x - xi(r), using
    numerically differentiated Christoffel symbols of the coordinate metric
    and finite differences of xi values only. Returns (SFFBlocks, max
    off-diagonal entry in the tangent basis)."""
    metric, D = ambient_metric_fn(g)
    n, mm = g.n, g.m - 1
    xs = np.array([r - 2 * step, r - step, r, r + step, r + 2 * step])
    xv = np.asarray(xi_fn(xs), dtype=float)
    d1 = (8 * (xv[3] - xv[1]) - (xv[4] - xv[0])) / (12 * step)
    d2 = (16 * (xv[3] + xv[1]) - (xv[4] + xv[0]) - 30 * xv[2]) / (12 * step ** 2)
    x = [r] + sphere_angles(n) + [float(xv[2])] + sphere_angles(mm, 0.05)
    g0, dg = metric_derivatives(metric, x, step, second=False)
    Gam = christoffel(g0, dg)
    dF = np.zeros(D)
    dF[0] = -d1
    dF[1 + n] = 1.0
    ddF = np.zeros((D, D))
    ddF[0, 0] = -d2
    hess = ddF - np.einsum("kij,k->ij", Gam, dF)
    norm = math.sqrt(dF @ np.linalg.solve(g0, dF))
    T = np.zeros(D)
    T[0], T[1 + n] = 1.0, d1
    basis = [T, np.eye(D)[1]]
    if mm > 0:
        basis.append(np.eye(D)[2 + n])
    B = np.array(basis)
    II = B @ hess @ B.T / norm
    Gm = B @ g0 @ B.T
    d = np.sqrt(np.diag(Gm))
    unit = II / np.outer(d, d)
    blocks = SFFBlocks(unit[0, 0], unit[1, 1], unit[2, 2] if mm > 0 else float("nan"))
    off = unit - np.diag(np.diag(unit))
    return blocks, float(np.max(np.abs(off)))


# ---- induced boundary metric ----

class BoundaryProfile(WarpProfile):
    """p(s) = f(r) sin(xi(r)) along the meridian arclength s of x = xi(r).

    Plateau and blend are parameterized through r(s) (Newton inversion of a
    Chebyshev antiderivative); the ball arc is parameterized by its own
    arclength, where p = sin(a) sin((S - s)/sin(a))."""

    kind = "boundary"

    def __init__(self, g, xi, cheb_degree=48):
        self.g, self.xi = g, xi
        self.r_p, self.r_j = xi.r_p, xi.r_join
        ks = list(xi.blend.breaks)
        self._segs = []
        s0 = self.r_p
        for lo, hi in zip(ks, ks[1:]):
            t = np.cos(np.pi * (np.arange(cheb_degree + 1) + 0.5) / (cheb_degree + 1))
            rr = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
            coef = C.chebfit(t, self._speed(rr), cheb_degree)
            anti = C.chebint(coef, lbnd=-1) * (0.5 * (hi - lo))
            self._segs.append((lo, hi, s0, anti))
            s0 = s0 + float(C.chebval(1.0, anti))
        self.s_join = s0
        ball = xi.ball
        self.phi_join = ball.center_angle(xi.R - self.r_j)
        self.sigma_join = math.sin(ball.a) * self.phi_join
        self.S = self.s_join + self.sigma_join
        self.breaks = (0.0, self.r_p, self.s_join, self.S)
        super().__init__((0.0, self.S))

    def _speed(self, r):
        f0 = self.g.f(r)
        x1 = self.xi.derivs(r)[1]
        return np.sqrt(1 + f0 ** 2 * x1 ** 2)

    def s_of_r(self, r):
        r = np.asarray(r, dtype=float)
        out = np.array(r, dtype=float, copy=True)
        for lo, hi, s0, anti in self._segs:
            m = (r > lo) & (r <= hi)
            if m.any():
                t = (2 * r[m] - lo - hi) / (hi - lo)
                out[m] = s0 + C.chebval(t, anti)
        return out

    def r_of_s(self, s):
        """Inverse of s_of_r on [0, s_join]."""
        s = np.asarray(s, dtype=float)
        r = np.array(s, dtype=float, copy=True)
        m = s > self.r_p
        if m.any():
            target = s[m]
            x = np.interp(target, [self.r_p, self.s_join], [self.r_p, self.r_j])
            for _ in range(50):
                err = self.s_of_r(x) - target
                x = np.clip(x - err / self._speed(x), self.r_p, self.r_j)
                if np.max(np.abs(err)) < 1e-15:
                    break
            r[m] = x
        return r

    def _derivs(self, s):
        s = np.asarray(s, dtype=float)
        v = np.empty(s.shape)
        d1 = np.empty(s.shape)
        d2 = np.empty(s.shape)
        curve = s <= self.s_join
        if curve.any():
            r = self.r_of_s(s[curve])
            f0, f1, f2 = self.g.f.derivs(r)
            x0, x1, x2 = self.xi.derivs(r)
            P = f0 * np.sin(x0)
            Pr = f1 * np.sin(x0) + f0 * np.cos(x0) * x1
            Prr = (f2 * np.sin(x0) + 2 * f1 * np.cos(x0) * x1
                   - f0 * np.sin(x0) * x1 ** 2 + f0 * np.cos(x0) * x2)
            sr = np.sqrt(1 + f0 ** 2 * x1 ** 2)
            srr = (f0 * f1 * x1 ** 2 + f0 ** 2 * x1 * x2) / sr
            v[curve] = P
            d1[curve] = Pr / sr
            d2[curve] = (Prr * sr - Pr * srr) / sr ** 3
        cap = ~curve
        if cap.any():
            sa = math.sin(self.xi.ball.a)
            phi = (self.S - s[cap]) / sa
            v[cap] = sa * np.sin(phi)
            d1[cap] = -np.cos(phi)
            d2[cap] = -np.sin(phi) / sa
        return v, d1, d2

    def to_json(self):
        return {"kind": "boundary", "domain": [0.0, float(self.S)], "xi": self.xi.to_json(),
                "join_arclength": float(self.s_join)}


def boundary_h(g, S):
    """h on the boundary: s = r until h is constant, so the pieces carry over."""
    h = g.h
    if not isinstance(h, PiecewisePolynomial) or h.coeffs[-1, 1:].any():
        raise ConvexityError("h must end with a constant piece")
    br = list(h.breaks[:-1]) + [S]
    if not br[-2] < S:
        raise ConvexityError("h must become constant before the boundary ends")
    return PiecewisePolynomial(br, [list(c) for c in h.coeffs])


def induced_boundary_metric(g, xi):
    """ds^2 + h^2 ds_n^2 + p^2 ds_{m-2}^2 on the hypersurface x = xi(r)."""
    if "R2" in g.markers and not float(g.markers["R2"]) <= xi.r_p:
        raise ConvexityError("h must be constant before the plateau ends")
    p = BoundaryProfile(g, xi)
    hb = boundary_h(g, p.S)
    markers = {k: g.markers[k] for k in ("R1", "R2") if k in g.markers}
    return doubly_warped(hb, p, g.n, g.m - 1, markers=markers, rho=g.rho)


# ---- gluing and classification ----

@dataclass
class GlueVerdict:
    verdict: str
    margin: float
    witness: dict = None
    note: str = ("the gluing condition is read as strict positivity of II_1 + Phi^* II_2 "
                 "on every block")

    def to_json(self):
        return {"verdict": self.verdict, "margin": float(self.margin), "witness": self.witness,
                "note": self.note}


def glue_check(b1, b2):
    """Verified iff II_1 + II_2 > 0 on every block and grid point."""
    d1, d2 = _blocks_dict(b1), _blocks_dict(b2)
    if set(d1) != set(d2):
        raise BlockMismatch(f"blocks differ: {sorted(d1)} vs {sorted(d2)}")
    worst = None
    for name in sorted(d1):
        a, b = np.asarray(d1[name], dtype=float), np.asarray(d2[name], dtype=float)
        if a.shape != b.shape and a.size != 1 and b.size != 1:
            raise BlockMismatch(f"block {name}: grid shapes {a.shape} and {b.shape}")
        s = np.atleast_1d(a + b)
        i = int(np.argmin(s))
        if worst is None or s[i] < worst[0]:
            worst = (float(s[i]), name, i)
    val, name, i = worst
    if val > 0:
        return GlueVerdict(cz.VERIFIED, val)
    return GlueVerdict(cz.FALSIFIED, val, {"block": name, "index": i, "sum": val})


def _blocks_dict(b):
    if isinstance(b, SFFBlocks):
        return b.as_dict()
    return dict(b)


@dataclass
class BoundaryMember:
    nu: float
    boundary: object     # singly warped profile p on [0, S]
    blocks: object       # SFFBlocks or dict of arrays

    def min_curvature(self):
        return min(float(np.min(v)) for v in _blocks_dict(self.blocks).values())


@dataclass
class BoundaryFamily:
    members: list = field(default_factory=list)


def round_deviation(p, samples=257):
    """Distance of ds^2 + p^2 ds_{q}^2 on [0, S] from the unit round sphere."""
    s = np.linspace(0.0, p.b, samples)
    dev_len = abs(p.b - math.pi)
    t = s * (math.pi / p.b)
    return dev_len + float(np.max(np.abs(p(s) - np.sin(t))))


def classify_boundary(fam, tol=1e-6, eps=1e-9, schedule=SOCKET_SCHEDULE):
    """Core, Socket or Neither, with the evidence."""
    if not fam.members:
        raise ConvexityError("empty family")
    for mem in fam.members:
        dev = round_deviation(mem.boundary)
        if dev > tol:
            raise BoundaryNotRound(dev)
    mins = [mem.min_curvature() for mem in fam.members]
    best = max(mins)
    if best >= eps:
        return {"class": "Core", "best_min_curvature": best, "schedule": list(schedule)}
    passed = []
    for nu in schedule:
        ok = any(mn > -nu for mn in mins)
        passed.append(ok)
        if not ok:
            return {"class": "Neither", "best_min_curvature": best, "failed_nu": nu,
                    "schedule": list(schedule)}
    return {"class": "Socket", "best_min_curvature": best, "schedule": list(schedule)}


def umbilic_blocks(value, size=1):
    v = np.full(size, float(value))
    return SFFBlocks(v, v.copy(), v.copy())


def embedded_ricci_oracle(g, xi, r, step=1e-4):
    """Ricci diagonal of the metric induced on x = xi(r), written in the
    ambient r coordinate and differentiated numerically."""
    n, q = g.n, g.m - 1

    def metric(X):
        rr = X[:, 0]
        f0 = g.f(rr)
        x0, x1, _ = xi.derivs(rr)
        diag = np.empty((X.shape[0], 1 + n + q))
        diag[:, 0] = 1 + f0 ** 2 * x1 ** 2
        diag[:, 1:1 + n] = (g.h(rr) ** 2)[:, None] * round_sphere_diag(X[:, 1:1 + n])
        diag[:, 1 + n:] = ((f0 * np.sin(x0)) ** 2)[:, None] * round_sphere_diag(X[:, 1 + n:])
        G = np.zeros((X.shape[0], 1 + n + q, 1 + n + q))
        idx = np.arange(1 + n + q)
        G[:, idx, idx] = diag
        return G
    x = [float(r)] + sphere_angles(n) + sphere_angles(q, 0.05)
    g0, dg, ddg = metric_derivatives(metric, x, step)
    ric = ricci_from_metric_derivs(g0, dg, ddg)
    d = np.diag(ric) / np.diag(g0)
    return float(d[0]), float(d[1]), float(d[1 + n])


# ---- the disk pipeline ----

NOT_RUN = "NotRun"
STAGES = ("a", "b", "c", "d", "e")
STAGE_TITLES = {
    "a": "ambient Ricci positivity and structure markers",
    "b": "Sphere(xi) weakly convex; plateau closed form",
    "c": "boundary metric satisfies the path hypotheses",
    "d": "stage-one and stage-two paths for the boundary",
    "e": "product region isometric to S^n_rho x round ball",
}


@dataclass
class StageResult:
    name: str
    verdict: str = NOT_RUN
    checks: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    error: str = ""

    def settle(self):
        vs = [c.verdict for c in self.certificates.values()]
        vs += [cz.VERIFIED if ok else cz.FALSIFIED for ok in
               (c["passed"] for c in self.checks.values())]
        if cz.FALSIFIED in vs:
            self.verdict = cz.FALSIFIED
        elif all(v == cz.VERIFIED for v in vs):
            self.verdict = cz.VERIFIED
        else:
            self.verdict = cz.INCONCLUSIVE
        return self.verdict

    def to_json(self):
        return {"stage": self.name, "title": STAGE_TITLES[self.name], "verdict": self.verdict,
                "error": self.error, "checks": {k: dict(v) for k, v in sorted(self.checks.items())},
                "certificates": {k: c.to_json() for k, c in sorted(self.certificates.items())}}


@dataclass
class CoreCertificate:
    params: dict
    stages: list

    @property
    def verdict(self):
        vs = [s.verdict for s in self.stages]
        if cz.FALSIFIED in vs:
            return cz.FALSIFIED
        if all(v == cz.VERIFIED for v in vs):
            return cz.VERIFIED
        return cz.INCONCLUSIVE

    def stage(self, name):
        return next(s for s in self.stages if s.name == name)

    def to_json(self):
        return {"kind": "core-certificate", "verdict": self.verdict, "params": dict(self.params),
                "stages": [s.to_json() for s in self.stages]}


def _check(passed, **kw):
    kw["passed"] = bool(passed)
    return {k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in kw.items()}


def _structure_markers(g):
    """Hypotheses on the ambient fixture; HypothesisViolated on failure."""
    from .isotopy import require_sign, require_const, HypothesisViolated
    for key in ("R1", "R2", "R3"):
        if key not in g.markers:
            raise HypothesisViolated(f"marker {key} is missing")
    a, R = g.interval
    R1, R2, R3 = (float(g.markers[k]) for k in ("R1", "R2", "R3"))
    rho = float(g.rho) if g.rho is not None else float(g.h(R))
    require_sign(g.h, 2, a, R2, -1, "h'' < 0 on (0, R2)")
    require_const(g.h, R2, R, rho, "h = rho on [R2, R]")
    require_sign(g.f, 2, a, R1, +1, "f'' > 0 on (0, R1)")
    require_sign(g.f, 2, R1, R, -1, "f'' < 0 on (R1, R)")
    r = np.linspace(R3, R, 513)
    dev = float(np.max(np.abs(g.f(r) - np.cos(r - R3 + math.pi / 8))))
    if dev > 1e-9:
        i = int(np.argmax(np.abs(g.f(r) - np.cos(r - R3 + math.pi / 8))))
        raise HypothesisViolated("f = cos(r - R3 + pi/8) on [R3, R]", float(r[i]), dev)
    if abs(R - R3 + math.pi / 8 - math.pi / 2) > 1e-12:
        raise HypothesisViolated("f must vanish at R", R, R - R3 + math.pi / 8)
    return {"R1": R1, "R2": R2, "R3": R3, "rho": rho}


def _stage_b(g, xi, st, grid, mode, threads, oracle_tol=1e-9):
    f, h = g.f, g.h
    c = xi.c
    a0 = g.guarded_interval()[0]
    rs = np.linspace(max(a0, 0.05), xi.r_p - 0.02, 8)
    err = 0.0
    for r in rs:
        ob, off = fd_shape_operator(g, xi, float(r))
        cb = second_fundamental_form(g, xi, float(r))
        err = max(err, abs(ob.tangent - cb.tangent), abs(ob.sphere_n - cb.sphere_n),
                  abs(ob.sphere_m2 - cb.sphere_m2), off)
    st.checks["plateau_oracle"] = _check(err <= oracle_tol, max_error=err, tol=oracle_tol, points=len(rs))
    cot_c = math.cos(c) / math.sin(c)
    st.certificates["plateau_sphere_m2"] = cz.certify_positive(
        lambda r: cot_c / f(r), [(a0, xi.r_p)], [grid], mode, claim="cot(c)/f > 0 on the plateau",
        threads=threads)
    if st.certificates["plateau_sphere_m2"].verdict == cz.FALSIFIED:
        return
    rp, rj, re = xi.r_p, xi.r_join, xi.r_end
    slope0 = -6.0 * float(xi.blend.coeffs[0][3])

    def weighted_tangent(r):
        r = np.asarray(r, dtype=float)
        G = geodesic_curvature_numerator(f.derivs(r), xi.derivs(r))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r - rp > 1e-12, G / (r - rp), slope0)

    def sph(r):
        return sff_graph(h.derivs(r), f.derivs(r), xi.derivs(r)).sphere_m2

    def tang(r):
        return sff_graph(h.derivs(r), f.derivs(r), xi.derivs(r)).tangent

    cut = re - 1e-4 * (re - rj)
    st.certificates["blend_tangent_weighted"] = cz.certify_boxes(
        weighted_tangent, [[(rp, rj)]], [grid], mode, claim="tangent curvature / (r - r_p) > 0 on the blend",
        threads=threads, max_depth=8)
    st.certificates["blend_sphere_m2"] = cz.certify_boxes(
        sph, [[(rp, rj)]], [grid], mode, claim="sphere-(m-2) curvature > 0 on the blend",
        threads=threads, max_depth=8)
    st.certificates["cap_tangent"] = cz.certify_boxes(
        tang, [[(rj, cut)]], [grid], mode, claim="tangent curvature > 0 on the cap", threads=threads, max_depth=8)
    st.certificates["cap_sphere_m2"] = cz.certify_boxes(
        sph, [[(rj, cut)]], [grid], mode, claim="sphere-(m-2) curvature > 0 on the cap", threads=threads,
        max_depth=8)
    cot_a = math.cos(xi.ball.a) / math.sin(xi.ball.a)
    rc = np.linspace(rj, cut, grid)
    bc = sff_graph(h.derivs(rc), f.derivs(rc), xi.derivs(rc))
    umb = max(float(np.max(np.abs(bc.tangent - cot_a))), float(np.max(np.abs(bc.sphere_m2 - cot_a))))
    st.checks["cap_umbilic"] = _check(umb <= 1e-6, max_deviation=umb, cot_a=cot_a)
    rall = np.linspace(a0, cut, 4 * grid)
    bn = sff_graph(h.derivs(rall), f.derivs(rall), xi.derivs(rall)).sphere_n
    st.checks["sphere_n_zero"] = _check(float(np.max(np.abs(bn))) <= 1e-12, max_abs=float(np.max(np.abs(bn))))
    st.checks["xi_concave"] = _check(float(np.max(xi.derivs(np.linspace(rp, cut, 4 * grid))[2])) <= 0.0,
                                     max_xi2=float(np.max(xi.derivs(np.linspace(rp, cut, 4 * grid))[2])))
    st.checks["join_c2"] = _check(xi.join_defect() <= 1e-7, defect=xi.join_defect())
    errs = 0.0
    for r in np.linspace(rp + 0.02, cut - 0.01, 6):
        ob, off = fd_shape_operator(g, xi, float(r))
        cb = second_fundamental_form(g, xi, float(r))
        errs = max(errs, abs(ob.tangent - cb.tangent), abs(ob.sphere_m2 - cb.sphere_m2), off)
    st.checks["graph_oracle"] = _check(errs <= 1e-6, max_error=errs, tol=1e-6)


def _stage_c(g, xi, gb, st, grid, mode, threads):
    from .isotopy import require_sign, certify_metric
    from .profiles import sphere_closure_specs, validate_closure
    p, hb = gb.f, gb.h
    S = p.S
    R1, R2 = float(gb.markers["R1"]), float(gb.markers["R2"])
    require_sign(p, 2, 0.0, R1, +1, "p'' > 0 on (0, R1)")
    require_sign(p, 2, R1, S, -1, "p'' < 0 on (R1, S)")
    require_sign(hb, 2, 0.0, R2, -1, "h'' < 0 on (0, R2)")
    specs = sphere_closure_specs(p.domain)
    bad = [s.role for k, prof in (("h", hb), ("f", p)) for s in specs[k]
           if not validate_closure(prof, s, tol=1e-8).passed]
    st.checks["closure"] = _check(not bad, failing=bad)
    rr = np.linspace(xi.r_p + 0.01, xi.r_join - 0.01, 5)
    worst = 0.0
    for r in rr:
        s = float(p.s_of_r(np.array([r]))[0])
        cf = ricci_doubly_warped(gb, s).as_tuple()
        fd = embedded_ricci_oracle(g, xi, float(r))
        worst = max(worst, max(abs(x - y) / max(1.0, abs(x)) for x, y in zip(cf, fd)))
    st.checks["reparameterization"] = _check(worst <= 1e-6, max_scaled_error=worst, tol=1e-6)
    cert = certify_metric(gb, grid, mode, threads, claim_prefix="boundary ")
    for k, v in cert.components.items():
        st.certificates[k] = v


def _stage_d(gb, st, grid, mode, threads):
    from .isotopy import stage_one_path, stage_two_path, certify_path, LAM_GRID
    p1 = stage_one_path(gb)
    c1 = certify_path(p1, (grid, LAM_GRID), mode, threads)
    p2 = stage_two_path(p1.metric_at(1.0))
    c2 = certify_path(p2, (grid, LAM_GRID), mode, threads)
    for stage, cert in (("one", c1), ("two", c2)):
        for k, v in cert.components.items():
            st.certificates[f"{stage}:{k}"] = v
    reps = p2.closure_reports([2.0])[0][1]
    st.checks["round_closure"] = _check(all(r.passed for r in reps))


def _stage_e(g, st, tol=1e-9):
    R3, R = float(g.markers["R3"]), g.R
    rho = float(g.rho)
    r = np.linspace(R3, R, 1025)
    dh = float(np.max(np.abs(g.h(r) - rho)))
    df = float(np.max(np.abs(g.f(r) - np.cos(r - R3 + math.pi / 8))))
    st.checks["h_constant"] = _check(dh <= tol, max_residual=dh, rho=rho)
    st.checks["f_round"] = _check(df <= tol, max_residual=df)
    st.checks["window"] = _check(abs((R - R3) - 3 * math.pi / 8) <= 1e-12, length=R - R3)


def disk_lemma_pipeline(n, m, rho, c, g=None, grid=512, mode="certified", threads=None, xi_options=None):
    """Run stages (a)-(e); stages after a failing one are NotRun. The
    fixture's fiber is S^{m-1}, i.e. g has dimensions (n, m - 1)."""
    from .isotopy import HypothesisViolated, InfeasibleCap, PathError, certify_metric
    from .models import disk_fixture
    if n < 2 or m < 4 or not rho > 0:
        raise ConvexityError("requires n >= 2, m >= 4 and rho > 0")
    g = disk_fixture(n, m, rho) if g is None else g
    if (g.n, g.m) != (n, m - 1):
        raise ConvexityError(f"fixture dimensions {(g.n, g.m)} differ from {(n, m - 1)}")
    stages = [StageResult(s) for s in STAGES]
    cert = CoreCertificate({"n": n, "m": m, "rho": float(rho), "c": float(c), "grid": grid, "mode": mode},
                           stages)
    sa, sb, sc, sd, se = stages
    sa.checks["markers"] = _check(True, **_structure_markers(g))
    for k, v in certify_metric(g, grid, mode, threads, claim_prefix="ambient ").components.items():
        sa.certificates[k] = v
    if sa.settle() != cz.VERIFIED:
        return cert
    if not 0 < c < math.pi / 2:
        a0 = g.guarded_interval()[0]
        cot_c = math.cos(c) / math.sin(c)
        f = g.f
        sb.certificates["plateau_sphere_m2"] = cz.certify_positive(
            lambda r: cot_c / f(r), [(a0, g.R - math.pi / 4)], [grid], mode,
            claim="cot(c)/f > 0 on the plateau", threads=threads)
        sb.error = f"c = {c} is outside (0, pi/2): the plateau is not convex"
        sb.settle()
        if sb.verdict == cz.VERIFIED:
            sb.verdict = cz.FALSIFIED
        return cert
    try:
        xi = build_xi(g, c, **(xi_options or {}))
    except InfeasibleBlend as e:
        sb.error = str(e)
        sb.verdict = cz.INCONCLUSIVE
        return cert
    cert.params["xi"] = xi.to_json()
    _stage_b(g, xi, sb, grid, mode, threads)
    if sb.settle() != cz.VERIFIED:
        return cert
    gb = induced_boundary_metric(g, xi)
    cert.params["boundary_length"] = float(gb.f.S)
    try:
        _stage_c(g, xi, gb, sc, grid, mode, threads)
    except HypothesisViolated as e:
        sc.error = str(e)
        sc.verdict = cz.FALSIFIED
        return cert
    if sc.settle() != cz.VERIFIED:
        return cert
    try:
        _stage_d(gb, sd, grid, mode, threads)
    except (HypothesisViolated, InfeasibleCap, PathError) as e:
        sd.error = str(e)
        sd.verdict = cz.FALSIFIED
        return cert
    if sd.settle() != cz.VERIFIED:
        return cert
    _stage_e(g, se)
    se.settle()
    return cert
