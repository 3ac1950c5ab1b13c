"""Warping functions: representation, JSON schema, joins and closure checks.

A profile is a C^2 scalar function on a closed interval that can report its
value together with its first two derivatives. Two families are provided:
closed-form builtins and piecewise polynomials of degree at most 7. Profiles
are immutable once built.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from . import kernels

TAU_JOIN = 1e-9
MAX_DEGREE = 7


class ProfileError(ValueError):
    pass


class NonMonotoneBreakpoints(ProfileError):
    def __init__(self, index, left, right):
        self.index, self.left, self.right = index, left, right
        super().__init__(f"breakpoints not strictly increasing at index {index}: {left} >= {right}")


class JoinDiscontinuity(ProfileError):
    def __init__(self, order, location, magnitude):
        self.order, self.location, self.magnitude = order, location, magnitude
        super().__init__(f"derivative of order {order} jumps by {magnitude:.3e} at r={location}")


class DomainMismatch(ProfileError):
    pass


def to_fraction(x):
    """Parse an exact rational from int, Fraction, 'num/den' text, or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(float(x))


def fraction_text(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _num(x):
    """JSON-friendly number: exact rationals as 'num/den' strings."""
    if isinstance(x, Fraction):
        return fraction_text(x)
    return float(x)


class WarpProfile:
    """Base class. Subclasses implement _derivs on float arrays."""

    kind = "abstract"
    exact = False

    def __init__(self, domain):
        a, b = domain
        if not float(a) < float(b):
            raise ProfileError(f"empty domain {domain}")
        self.domain = (a, b)

    @property
    def a(self):
        return float(self.domain[0])

    @property
    def b(self):
        return float(self.domain[1])

    @property
    def length(self):
        return self.b - self.a

    def derivs(self, r):
        """(value, first derivative, second derivative) at r."""
        r = np.asarray(r, dtype=float)
        v, d1, d2 = self._derivs(r)
        if r.ndim == 0:
            return float(v), float(d1), float(d2)
        return v, d1, d2

    def __call__(self, r):
        return self.derivs(r)[0]

    def deriv(self, r, order=1):
        if order not in (0, 1, 2):
            raise ValueError("only orders 0, 1, 2 are available")
        return self.derivs(r)[order]

    def derivs_exact(self, r):
        raise NotImplementedError(f"{self.kind} profiles have no exact mode")

    def _derivs(self, r):
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} on [{self.a:g}, {self.b:g}]>"


class PiecewisePolynomial(WarpProfile):
    """pieces[i][j] multiplies (r - breakpoints[i])**j on [b_i, b_{i+1}].

    Coefficients given as Fractions (or 'num/den' text) keep an exact copy so
    that joins and evaluation can run in rational arithmetic.
    """

    kind = "piecewise"

    def __init__(self, breakpoints, pieces, tol=TAU_JOIN, check=True):
        if len(breakpoints) < 2 or len(pieces) != len(breakpoints) - 1:
            raise ProfileError("need len(pieces) == len(breakpoints) - 1 >= 1")
        for i, c in enumerate(pieces):
            if len(c) > MAX_DEGREE + 1:
                raise ProfileError(f"piece {i} has degree {len(c) - 1} > {MAX_DEGREE}")
        self.exact = all(_is_exact(x) for x in breakpoints) and all(
            _is_exact(x) for c in pieces for x in c)
        if self.exact:
            bq = [to_fraction(x) for x in breakpoints]
            cq = [[to_fraction(x) for x in c] + [Fraction(0)] * (MAX_DEGREE + 1 - len(c))
                  for c in pieces]
            self._bq, self._cq = bq, cq
        else:
            self._bq = self._cq = None
        bf = np.array([float(x) for x in breakpoints])
        for i in range(len(bf) - 1):
            if not bf[i] < bf[i + 1]:
                raise NonMonotoneBreakpoints(i, bf[i], bf[i + 1])
        cf = np.zeros((len(pieces), MAX_DEGREE + 1))
        for i, c in enumerate(pieces):
            cf[i, :len(c)] = [float(x) for x in c]
        self.breaks = bf
        self.coeffs = cf
        self.tol = tol
        dom = (self._bq[0], self._bq[-1]) if self.exact else (bf[0], bf[-1])
        super().__init__(dom)
        if check:
            worst = self.join_defect()
            if worst is not None and worst[2] > (0 if self.exact else tol):
                raise JoinDiscontinuity(*worst)

    def join_defect(self):
        """Worst (order, location, magnitude) over interior joins, or None."""
        worst = None
        for i in range(1, len(self.breaks) - 1):
            left = self._piece_end(i - 1)
            right = self._piece_start(i)
            for order in range(3):
                gap = abs(left[order] - right[order])
                scale = 1.0 if self.exact else max(1.0, abs(float(left[order])))
                mag = float(gap) / scale if not self.exact else gap
                if worst is None or mag > worst[2]:
                    loc = self._bq[i] if self.exact else float(self.breaks[i])
                    worst = (order, loc, mag)
        if worst is not None and self.exact:
            worst = (worst[0], worst[1], float(worst[2]))
        return worst

    def _piece_end(self, i):
        if self.exact:
            return _horner_exact(self._cq[i], self._bq[i + 1] - self._bq[i])
        t = self.breaks[i + 1] - self.breaks[i]
        return _horner_float(self.coeffs[i], t)

    def _piece_start(self, i):
        c = self._cq[i] if self.exact else self.coeffs[i]
        return (c[0], c[1], 2 * c[2])

    def _derivs(self, r):
        return kernels.pp_eval(self.breaks, self.coeffs, r)

    def derivs_exact(self, r):
        if not self.exact:
            raise ProfileError("profile was built from floats")
        r = to_fraction(r)
        k = 0
        while k < len(self._bq) - 2 and self._bq[k + 1] <= r:
            k += 1
        return _horner_exact(self._cq[k], r - self._bq[k])

    def degree(self):
        nz = np.nonzero(np.any(self.coeffs != 0, axis=0))[0]
        return int(nz[-1]) if nz.size else 0

    def to_json(self):
        if self.exact:
            bps = [_num(x) for x in self._bq]
            pcs = [[_num(x) for x in _trim(c)] for c in self._cq]
        else:
            bps = [float(x) for x in self.breaks]
            pcs = [[float(x) for x in _trim(list(c))] for c in self.coeffs]
        return {"kind": "piecewise", "domain": [bps[0], bps[-1]], "breakpoints": bps,
                "pieces": pcs}


def _is_exact(x):
    return isinstance(x, (Fraction, int, np.integer, str))


def _trim(c):
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _horner_exact(c, t):
    v = d1 = d2 = Fraction(0)
    for cj in reversed(c):
        d2 = d2 * t + 2 * d1
        d1 = d1 * t + v
        v = v * t + cj
    return v, d1, d2


def _horner_float(c, t):
    v = d1 = d2 = 0.0
    for cj in reversed(list(c)):
        d2 = d2 * t + 2 * d1
        d1 = d1 * t + v
        v = v * t + cj
    return v, d1, d2


FAMILIES = ("sin", "cos", "const", "affine-sin")


class AnalyticProfile(WarpProfile):
    """Closed-form builtins.

    sin:        amplitude * sin(frequency * r)
    cos:        amplitude * cos(frequency * r)
    const:      value
    affine-sin: offset + amplitude * sin(frequency * r + phase)
    """

    kind = "analytic"

    def __init__(self, family, params, domain):
        if family not in FAMILIES:
            raise ProfileError(f"unknown analytic family {family!r}")
        self.family = family
        self.params = {k: to_fraction(v) if _is_exact(v) else float(v) for k, v in params.items()}
        need = {"sin": ("amplitude", "frequency"), "cos": ("amplitude", "frequency"),
                "const": ("value",), "affine-sin": ("offset", "amplitude", "frequency", "phase")}
        defaults = {"amplitude": 1, "frequency": 1, "offset": 0, "phase": 0}
        for key in need[family]:
            if key not in self.params:
                if key not in defaults:
                    raise ProfileError(f"family {family} needs parameter {key!r}")
                self.params[key] = Fraction(defaults[key])
        self.exact = family == "const" and _is_exact(self.params["value"])
        super().__init__(domain)

    def _f(self, key):
        return float(self.params[key])

    def _derivs(self, r):
        fam = self.family
        if fam == "const":
            v = np.full_like(r, self._f("value"))
            z = np.zeros_like(r)
            return v, z, z.copy()
        w = self._f("frequency")
        A = self._f("amplitude")
        if fam == "sin":
            s, c = np.sin(w * r), np.cos(w * r)
            return A * s, A * w * c, -A * w * w * s
        if fam == "cos":
            s, c = np.sin(w * r), np.cos(w * r)
            return A * c, -A * w * s, -A * w * w * c
        x = w * r + self._f("phase")
        s, c = np.sin(x), np.cos(x)
        return self._f("offset") + A * s, A * w * c, -A * w * w * s

    def derivs_exact(self, r):
        if not self.exact:
            raise ProfileError(f"{self.family} has no exact evaluation")
        return self.params["value"], Fraction(0), Fraction(0)

    def to_json(self):
        return {"kind": "analytic", "family": self.family,
                "domain": [_num(self.domain[0]), _num(self.domain[1])],
                "params": {k: _num(v) for k, v in sorted(self.params.items())}}


class CombinedProfile(WarpProfile):
    """Finite weighted sum of profiles on a common domain."""

    kind = "sum"

    def __init__(self, terms):
        terms = [(w if isinstance(w, Fraction) else (Fraction(w) if isinstance(w, int) else float(w)), p)
                 for w, p in terms]
        if not terms:
            raise ProfileError("empty sum")
        dom = terms[0][1].domain
        for _, p in terms[1:]:
            if not _same_domain(p.domain, dom):
                raise DomainMismatch(f"domains {p.domain} and {dom} differ")
        self.terms = terms
        self.exact = all(isinstance(w, Fraction) and p.exact for w, p in terms)
        super().__init__(dom)

    def _derivs(self, r):
        out = [np.zeros_like(r) for _ in range(3)]
        for w, p in self.terms:
            if w == 0:
                continue
            vals = p._derivs(r)
            for k in range(3):
                out[k] = out[k] + float(w) * vals[k]
        return tuple(out)

    def derivs_exact(self, r):
        if not self.exact:
            raise ProfileError("sum contains non-exact terms")
        out = [Fraction(0)] * 3
        for w, p in self.terms:
            vals = p.derivs_exact(r)
            out = [o + w * v for o, v in zip(out, vals)]
        return tuple(out)

    def to_json(self):
        return {"kind": "sum", "domain": [_num(self.domain[0]), _num(self.domain[1])],
                "terms": [{"weight": _num(w), "profile": p.to_json()} for w, p in self.terms]}


class ClampedProfile(WarpProfile):
    """A profile viewed on a larger domain; outside its own domain it is
    continued by its Taylor polynomial of order 2 at the nearest end. Used to
    reuse h on a reparameterized boundary where h is constant near the end."""

    kind = "clamped"

    def __init__(self, base, domain):
        self.base = base
        super().__init__(domain)

    def _derivs(self, r):
        lo, hi = self.base.a, self.base.b
        rc = np.clip(r, lo, hi)
        v, d1, d2 = self.base._derivs(rc)
        t = r - rc
        return v + d1 * t + 0.5 * d2 * t * t, d1 + d2 * t, d2

    def to_json(self):
        return {"kind": "clamped", "domain": [float(self.a), float(self.b)],
                "base": self.base.to_json()}


def continuation(profile, r):
    """Value-only function that agrees with profile on the piece holding r
    and continues that piece smoothly past its knots.

    Finite differences of the continuation give one-sided derivatives at r
    even when the stencil straddles a join where higher derivatives jump.
    """
    if isinstance(profile, PiecewisePolynomial):
        i = int(np.clip(np.searchsorted(profile.breaks, r, side="right") - 1,
                        0, len(profile.coeffs) - 1))
        c, b0 = profile.coeffs[i][::-1], profile.breaks[i]
        return lambda x: np.polyval(c, np.asarray(x, dtype=float) - b0)
    if isinstance(profile, CombinedProfile):
        parts = [(float(w), continuation(q, r)) for w, q in profile.terms if w != 0]
        return lambda x: sum(w * q(x) for w, q in parts)
    if isinstance(profile, ClampedProfile):
        if profile.base.a <= r <= profile.base.b:
            return continuation(profile.base, r)
    return profile


def _same_domain(d0, d1, tol=1e-12):
    return abs(float(d0[0]) - float(d1[0])) <= tol and abs(float(d0[1]) - float(d1[1])) <= tol


def make_profile(spec):
    """Build a profile from the JSON schema (a dict)."""
    kind = spec.get("kind")
    if kind == "analytic":
        return AnalyticProfile(spec["family"], spec.get("params", {}), tuple(spec["domain"]))
    if kind == "piecewise":
        bps = [_parse(x) for x in spec["breakpoints"]]
        pcs = [[_parse(x) for x in c] for c in spec["pieces"]]
        dom = spec.get("domain")
        if dom is not None and not _same_domain((float(to_fraction(dom[0])), float(to_fraction(dom[1]))),
                                                (float(bps[0]), float(bps[-1]))):
            raise ProfileError("breakpoints must span the stated domain")
        return PiecewisePolynomial(bps, pcs)
    if kind == "sum":
        return CombinedProfile([(_parse(t.get("weight", 1)), make_profile(t["profile"]))
                                for t in spec["terms"]])
    if kind == "clamped":
        return ClampedProfile(make_profile(spec["base"]), tuple(spec["domain"]))
    raise ProfileError(f"unknown profile kind {kind!r}")


def _parse(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, bool):
        raise ProfileError("booleans are not numbers")
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def convex_combine(p0, p1, lam):
    """(1 - lam) p0 + lam p1. Exact weights when lam is rational."""
    if not _same_domain(p0.domain, p1.domain):
        raise DomainMismatch(f"domains {p0.domain} and {p1.domain} differ")
    lam = lam if isinstance(lam, (Fraction, int)) else float(lam)
    if isinstance(lam, int):
        lam = Fraction(lam)
    if lam == 0:
        return p0
    if lam == 1:
        return p1
    return CombinedProfile([(1 - lam, p0), (lam, p1)])


def hermite_cubic(a, b, ya, dya, yb, dyb):
    """Cubic through (a, ya, dya) and (b, yb, dyb) as a one-piece profile."""
    L = b - a
    c2 = (3 * (yb - ya) / L - 2 * dya - dyb) / L
    c3 = (dya + dyb - 2 * (yb - ya) / L) / (L * L)
    return PiecewisePolynomial([a, b], [[ya, dya, c2, c3]])


def poly_profile(breaks, polys):
    """Piecewise profile from numpy Polynomial objects expressed in r;
    each is re-expanded about its left breakpoint."""
    pieces = []
    for i, p in enumerate(polys):
        q = p.convert() if hasattr(p, "convert") else p
        shifted = _shift(np.asarray(q.coef, dtype=float), breaks[i])
        pieces.append(list(shifted))
    return PiecewisePolynomial(list(breaks), pieces)


def _shift(coef, x0):
    """Coefficients of p(x0 + t) in powers of t."""
    n = len(coef)
    out = np.zeros(n)
    for j in range(n):
        for i in range(j, n):
            out[j] += coef[i] * math.comb(i, j) * x0 ** (i - j)
    return out


# ---- closure ----

ROLES = ("collapse-at-left", "collapse-at-right", "even-at-left", "even-at-right",
         "positive-everywhere")


@dataclass(frozen=True)
class ClosureSpec:
    """Endpoint conditions for smooth closure of a warped metric.

    collapse roles: the fiber shrinks to a point with unit speed.
    even roles: the profile stays positive with vanishing slope (the other
    factor collapses there).
    """
    role: str
    domain: tuple

    def __post_init__(self):
        if self.role not in ROLES:
            raise ProfileError(f"unknown closure role {self.role!r}")

    def constraints(self):
        a, b = float(self.domain[0]), float(self.domain[1])
        if self.role == "collapse-at-left":
            return [(a, 0, 0.0), (a, 1, 1.0), (a, 2, 0.0)]
        if self.role == "collapse-at-right":
            return [(b, 0, 0.0), (b, 1, -1.0), (b, 2, 0.0)]
        if self.role == "even-at-left":
            return [(a, 1, 0.0)]
        if self.role == "even-at-right":
            return [(b, 1, 0.0)]
        return []


@dataclass
class ClosureReport:
    role: str
    checks: list = field(default_factory=list)
    passed: bool = True

    def to_json(self):
        return {"role": self.role, "passed": self.passed,
                "checks": [dict(c) for c in self.checks]}


def validate_closure(p, spec, tol=1e-9, samples=513):
    """Measure each closure constraint; failures are reported, not raised."""
    rep = ClosureReport(spec.role)
    for point, order, target in spec.constraints():
        measured = float(p.derivs(point)[order])
        res = abs(measured - target)
        ok = res <= tol
        rep.checks.append({"point": point, "order": order, "target": target,
                           "measured": measured, "residual": res, "passed": ok})
        rep.passed &= ok
    a, b = float(spec.domain[0]), float(spec.domain[1])
    if spec.role == "positive-everywhere":
        r = np.linspace(a, b, samples)
        v = p(r)
        i = int(np.argmin(v))
        ok = bool(v[i] > 0)
        rep.checks.append({"point": float(r[i]), "order": 0, "target": "positive",
                           "measured": float(v[i]), "residual": max(0.0, -float(v[i])), "passed": ok})
        rep.passed &= ok
    elif spec.role.startswith("even"):
        end = a if spec.role.endswith("left") else b
        v = float(p(end))
        ok = v > tol
        rep.checks.append({"point": end, "order": 0, "target": "positive",
                           "measured": v, "residual": max(0.0, -v), "passed": ok})
        rep.passed &= ok
    return rep


def sphere_closure_specs(domain):
    """Closure roles for dr^2 + h^2 ds_n^2 + f^2 ds_m^2 to close up as a sphere:
    h collapses at the left end, f at the right end."""
    return {"h": [ClosureSpec("collapse-at-left", domain), ClosureSpec("even-at-right", domain)],
            "f": [ClosureSpec("even-at-left", domain), ClosureSpec("collapse-at-right", domain)]}


def singly_closure_specs(domain):
    return [ClosureSpec("collapse-at-left", domain), ClosureSpec("collapse-at-right", domain)]
