from fractions import Fraction
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from riccicert.profiles import (AnalyticProfile, ClosureSpec, DomainMismatch, JoinDiscontinuity,
                                NonMonotoneBreakpoints, PiecewisePolynomial, convex_combine,
                                hermite_cubic, make_profile, validate_closure)


def sin_on(b):
    return AnalyticProfile("sin", {"amplitude": 1, "frequency": 1}, (0.0, b))


def test_analytic_sin_value():
    p = make_profile({"kind": "analytic", "family": "sin", "domain": [0, math.pi / 2],
                      "params": {"amplitude": 1, "frequency": 1}})
    assert p(0.3) == pytest.approx(math.sin(0.3), abs=1e-15)


def test_mismatched_second_derivative_is_reported():
    with pytest.raises(JoinDiscontinuity) as e:
        PiecewisePolynomial([0, 1, 2], [[0, 0, 0, 1], [1, 3, 4, 0]])
    assert e.value.order == 2
    assert e.value.location == 1
    assert e.value.magnitude == pytest.approx(2.0)


def test_non_monotone_breakpoints():
    with pytest.raises(NonMonotoneBreakpoints):
        PiecewisePolynomial([0, 2, 1], [[1], [1]])


def test_hermite_cubic_endpoint_data():
    p = hermite_cubic(0.0, math.pi / 2, 1, 0, 0, -1)
    assert p(0.0) == pytest.approx(1.0, abs=1e-14)
    assert p.deriv(math.pi / 2, 1) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("role,p,ok", [
    ("collapse-at-left", sin_on(math.pi), True),
    ("collapse-at-right", AnalyticProfile("cos", {"amplitude": 1, "frequency": 1}, (0, math.pi / 2)), True),
    ("collapse-at-left", PiecewisePolynomial([0, 1], [[0, 0, 1]]), False),
])
def test_validate_closure_examples(role, p, ok):
    rep = validate_closure(p, ClosureSpec(role, p.domain), tol=1e-9)
    assert rep.passed is ok
    for c in rep.checks:
        assert c["passed"] == (c["residual"] <= 1e-9)


def test_convex_combine_endpoints_are_identities():
    p0, p1 = sin_on(math.pi), AnalyticProfile("sin", {"amplitude": 2, "frequency": 1}, (0, math.pi))
    assert convex_combine(p0, p1, 0) is p0
    assert convex_combine(p0, p1, 1) is p1
    assert convex_combine(p0, p1, 0.5)(math.pi / 2) == pytest.approx(1.5, abs=1e-15)


def test_convex_combine_domain_mismatch():
    with pytest.raises(DomainMismatch):
        convex_combine(sin_on(1.0), sin_on(2.0), 0.5)


def test_exact_rational_mode_is_exact():
    p0 = PiecewisePolynomial([0, 1], [[Fraction(1), Fraction(1, 3)]])
    p1 = PiecewisePolynomial([0, 1], [[Fraction(2), Fraction(-1, 7)]])
    lam = Fraction(2, 5)
    q = convex_combine(p0, p1, lam)
    r = Fraction(3, 4)
    assert q.derivs_exact(r)[0] == (1 - lam) * p0.derivs_exact(r)[0] + lam * p1.derivs_exact(r)[0]


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0, 1), r=st.floats(0.01, 3.1))
def test_convex_combine_linear_in_lambda(lam, r):
    p0 = sin_on(math.pi)
    p1 = PiecewisePolynomial([0, math.pi], [[1.0, 0.2, -0.1]])
    q = convex_combine(p0, p1, lam)
    assert q(r) == pytest.approx((1 - lam) * p0(r) + lam * p1(r), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_derivatives_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    from scipy.interpolate import CubicSpline
    x = np.linspace(0, 1, 5)
    cs = CubicSpline(x, rng.normal(size=5))
    p = PiecewisePolynomial(list(x), [[float(cs.c[3 - j, i]) for j in range(4)] for i in range(4)])
    r, h = float(rng.uniform(0.05, 0.95)), 1e-4
    v = p.derivs(r)
    third = float(np.max(np.abs(6 * cs.c[0])))
    assert (p(r + h) - p(r - h)) / (2 * h) == pytest.approx(v[1], abs=h * h * third / 6 + 1e-9)
