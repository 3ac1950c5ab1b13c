"""Builders for the metrics used as fixtures.

The surgery-type metric on a sphere is modelled by explicit profiles with the
qualitative shape the construction needs: h rises concavely from 0 and is
constant rho beyond R2 = 2 rho; f is cos(r) plus a compactly supported bump
that makes f convex near r = 0 with a single inflection R1, and f = cos(r)
beyond the bump.
"""
from fractions import Fraction
import math

import numpy as np
from scipy.optimize import brentq

from .curvature import doubly_warped, singly_warped
from .profiles import AnalyticProfile, CombinedProfile, PiecewisePolynomial

# phi(u) = u - 13/64 u^3 + 3/128 u^5 - 1/1024 u^7 on [0, 2]:
# phi(2) = 1, phi'(2) = phi''(2) = 0, strictly concave on (0, 2).
PHI = (Fraction(0), Fraction(1), Fraction(0), Fraction(-13, 64), Fraction(0),
       Fraction(3, 128), Fraction(0), Fraction(-1, 1024))
PHI_END = 2


def h_profile(rho, R):
    """rho * phi(r / rho) on [0, 2 rho], then constant rho."""
    rho_q = Fraction(rho).limit_denominator(10 ** 12) if not isinstance(rho, Fraction) else rho
    coef = [float(c * rho_q ** (1 - j)) if c else 0.0 for j, c in enumerate(PHI)]
    r2 = float(PHI_END * rho_q)
    if not r2 < R:
        raise ValueError(f"2*rho={r2} must be below R={R}")
    return PiecewisePolynomial([0.0, r2, float(R)], [coef, [float(rho_q)]])


def bump_profile(rb, kappa0, R):
    """B(r) = -(1 + kappa0) rb^2 (1 - r^2/rb^2)^3 / 6 on [0, rb], zero after."""
    A = -(1 + kappa0) * rb ** 2 / 6
    coef = [A, 0.0, -3 * A / rb ** 2, 0.0, 3 * A / rb ** 4, 0.0, -A / rb ** 6]
    return PiecewisePolynomial([0.0, float(rb), float(R)], [coef, [0.0]])


def f_profile(rb, kappa0, R):
    cos = AnalyticProfile("cos", {"amplitude": 1, "frequency": 1}, (0.0, float(R)))
    return CombinedProfile([(1, cos), (1, bump_profile(rb, kappa0, R))])


def inflection(f, lo, hi):
    return brentq(lambda x: f.derivs(x)[2], lo, hi, xtol=1e-15, rtol=1e-15)


def surgery_metric(n, m, rho, rb, kappa0=0.1, R=math.pi / 2):
    """Doubly warped metric with markers R1 (inflection of f), R2 = 2 rho and
    R3 = pi/8 (f = cos(r - R3 + pi/8) for r >= R3)."""
    R3 = math.pi / 8
    if rb > R3:
        raise ValueError("the bump must end before R3 = pi/8")
    h = h_profile(rho, R)
    f = f_profile(rb, kappa0, R)
    R1 = inflection(f, 1e-9, rb * (1 - 1e-12))
    return doubly_warped(h, f, n, m, markers={"R1": R1, "R2": float(h.breaks[1]), "R3": R3}, rho=float(rho))


def s5_fixture():
    """n = m = 2 on S^5, rho = 1/20, bump width 3/10."""
    return surgery_metric(2, 2, 0.05, 0.3)


def disk_fixture(n, m, rho, kappa0=0.1, width_factor=6.0, width_cap=0.375):
    """Ambient metric for the disk construction: fibers S^n and S^{m-1}."""
    rb = min(width_factor * rho, width_cap)
    return surgery_metric(n, m - 1, rho, rb, kappa0)


def round_metric(a, n, m):
    """a sin(r/a), a cos(r/a) on [0, a pi/2]: the round sphere of radius a."""
    dom = (0.0, a * math.pi / 2)
    h = AnalyticProfile("sin", {"amplitude": a, "frequency": 1 / a}, dom)
    f = AnalyticProfile("cos", {"amplitude": a, "frequency": 1 / a}, dom)
    return doubly_warped(h, f, n, m)


def docking_profile(S=2.5, eps=0.1, q=3):
    """Boundary of a geodesic ball in a docking-type metric, modelled by
    (S/pi)[(1 + eps) sin(pi s/S) - eps sin(3 pi s/S)/3]: unit end slopes,
    strictly concave for eps < 1/8."""
    dom = (0.0, float(S))
    w = math.pi / S
    base = AnalyticProfile("sin", {"amplitude": (1 + eps) / w, "frequency": w}, dom)
    third = AnalyticProfile("sin", {"amplitude": -eps / (3 * w), "frequency": 3 * w}, dom)
    return singly_warped(CombinedProfile([(1, base), (1, third)]), q)


def random_spline_metric(rng, n=2, m=2, pieces=3):
    """Random C^2 doubly warped data bounded away from zero, for oracle tests.

    Each profile is a positive constant plus a random C^2 cubic spline
    (natural end conditions), assembled as a piecewise polynomial."""
    from scipy.interpolate import CubicSpline
    L = float(rng.uniform(0.8, 1.6))
    knots = np.linspace(0.0, L, pieces + 1)

    def one():
        vals = rng.uniform(0.6, 1.4, size=pieces + 1)
        cs = CubicSpline(knots, vals, bc_type="natural")
        pcs = [[float(cs.c[3 - j, i]) for j in range(4)] for i in range(pieces)]
        return PiecewisePolynomial(list(knots), pcs)
    return doubly_warped(one(), one(), n, m)
