import math

import numpy as np
import pytest

from riccicert import certify as cz
from riccicert.convexity import (BlockMismatch, BoundaryFamily, BoundaryMember, BoundaryNotRound,
                                 SingularNormal, build_xi, classify_boundary, disk_lemma_pipeline,
                                 embedded_ricci_oracle, fd_shape_operator, glue_check,
                                 induced_boundary_metric, second_fundamental_form, sff_graph,
                                 umbilic_blocks)
from riccicert.curvature import doubly_warped, ricci_doubly_warped
from riccicert.isotopy import HypothesisViolated
from riccicert.models import disk_fixture
from riccicert.profiles import AnalyticProfile, CombinedProfile, PiecewisePolynomial


@pytest.fixture(scope="module")
def disk():
    g = disk_fixture(2, 4, 0.1)
    return g, build_xi(g, 0.2)


def unit_sphere(p=math.pi, q=None):
    return AnalyticProfile("sin", {"amplitude": 1, "frequency": 1}, (0.0, math.pi))


def test_xi_invariants(disk):
    g, xi = disk
    r = np.linspace(0, xi.r_end - 1e-6, 4001)
    v, d1, d2 = xi.derivs(r)
    assert np.all(v[r <= xi.r_p] == xi.c)
    assert np.all(d2[r > xi.r_p] <= 0)
    assert np.all((v > 0) & (v < math.pi))
    assert xi.join_defect() < 1e-7
    assert xi.r_join >= g.R - math.pi / 8


def test_plateau_closed_form(disk):
    g, xi = disk
    for r in (0.2, 0.5):
        b = second_fundamental_form(g, xi, r)
        assert (b.tangent, b.sphere_n) == (0.0, 0.0)
        assert b.sphere_m2 == pytest.approx(1 / math.tan(0.2) / g.f(r), rel=1e-15)


def test_plateau_pi_over_4_example():
    h = (np.array(1.0), np.array(0.0), np.array(0.0))
    f = (np.array(2.0), np.array(0.0), np.array(0.0))
    b = sff_graph(h, f, (np.array(math.pi / 4), np.array(0.0), np.array(0.0)))
    assert float(b.sphere_m2) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("r0", [0.4, 0.9])
def test_round_caps_are_umbilic(r0):
    """Ball of radius r0 about a point of the unit sphere dr^2 + sin^2 ds_2^2 + cos^2 ds_2^2."""
    r = np.linspace(0.05, r0 - 0.05, 40)
    cr, sr = np.cos(r), np.sin(r)
    u = math.cos(r0) / cr
    w = np.sqrt(1 - u * u)
    x = np.arccos(u)
    u1 = math.cos(r0) * sr / cr ** 2
    u2 = math.cos(r0) * (1 + sr ** 2) / cr ** 3
    x1 = -u1 / w
    x2 = -u2 / w - u * u1 ** 2 / w ** 3
    b = sff_graph((sr, cr, -sr), (cr, -sr, -cr), (x, x1, x2))
    for blk in (b.tangent, b.sphere_n, b.sphere_m2):
        np.testing.assert_allclose(blk, 1 / math.tan(r0), atol=1e-9)


def test_graph_formula_matches_oracle(disk):
    g, xi = disk
    for r in (xi.r_p + 0.1, xi.r_join + 0.005):
        ob, off = fd_shape_operator(g, xi, r)
        cb = second_fundamental_form(g, xi, r)
        assert ob.tangent == pytest.approx(cb.tangent, abs=1e-6)
        assert ob.sphere_m2 == pytest.approx(cb.sphere_m2, abs=1e-6)
        assert off < 1e-7


def test_cap_sphere_blocks_positive(disk):
    g, xi = disk
    r = np.linspace(xi.r_join, xi.r_end - 1e-3, 200)
    b = second_fundamental_form(g, xi, r)
    assert np.all(b.sphere_m2 > 0) and np.all(b.tangent > 0)


def test_singular_normal(disk):
    g, xi = disk
    with pytest.raises(SingularNormal):
        second_fundamental_form(g, xi, xi.r_end)


def test_boundary_metric(disk):
    g, xi = disk
    gb = induced_boundary_metric(g, xi)
    p = gb.f
    s = np.linspace(0, xi.r_p, 50)
    np.testing.assert_allclose(p(s), math.sin(0.2) * g.f(s), rtol=1e-14)
    sc = np.linspace(p.s_join, p.S, 100)[1:-1]
    assert np.all(p.derivs(sc)[2] < 0)
    left, right = p.derivs(p.s_join - 1e-10), p.derivs(p.s_join + 1e-10)
    assert left == pytest.approx(right, abs=1e-6)
    assert (gb.n, gb.m) == (2, 2)


def test_reparameterization_consistency(disk):
    g, xi = disk
    gb = induced_boundary_metric(g, xi)
    for r in (0.3, xi.r_p + 0.2, xi.r_join - 0.05):
        s = float(gb.f.s_of_r(np.array([r]))[0])
        cf = ricci_doubly_warped(gb, s).as_tuple()
        fd = embedded_ricci_oracle(g, xi, r)
        for x, y in zip(cf, fd):
            assert abs(x - y) <= 1e-6 * max(1.0, abs(x))


def test_constant_xi_scales_round_profile():
    """Plateau over the whole interval: p = sin(c) f raises fiber curvature by 1/sin^2 c."""
    c = 0.3
    f = AnalyticProfile("cos", {"amplitude": 1, "frequency": 1}, (0, math.pi / 2))
    p = AnalyticProfile("cos", {"amplitude": math.sin(c), "frequency": 1}, (0, math.pi / 2))
    r = 0.6
    kf = (1 - f.derivs(r)[1] ** 2) / f(r) ** 2
    kp = (1 - p.derivs(r)[1] ** 2) / p(r) ** 2
    assert kp >= kf


def test_glue_examples():
    z = umbilic_blocks(0.0, 5)
    v = glue_check(z, z)
    assert v.verdict == cz.FALSIFIED and v.witness["sum"] <= 0
    ball = umbilic_blocks(1.0)
    sock = umbilic_blocks(-0.5)
    v = glue_check(ball, sock)
    assert v.verdict == cz.VERIFIED and v.margin == pytest.approx(0.5)
    nu = 0.1
    disk_ii = umbilic_blocks(1 / math.tan(math.pi / 2 - nu))
    assert glue_check(disk_ii, umbilic_blocks(-0.5 * math.tan(nu))).verdict == cz.VERIFIED


def test_glue_symmetric_and_mismatch():
    a = {"tangent": np.array([0.3, -0.1]), "sphere_n": np.array([0.2, 0.2])}
    b = {"tangent": np.array([0.1, 0.2]), "sphere_n": np.array([-0.1, 0.0])}
    assert glue_check(a, b).to_json() == glue_check(b, a).to_json()
    with pytest.raises(BlockMismatch):
        glue_check(a, {"tangent": np.array([1.0])})


def member(v, nu=0.0):
    return BoundaryMember(nu, unit_sphere(), umbilic_blocks(v, 3))


def test_classify_examples():
    assert classify_boundary(BoundaryFamily([member(1 / math.tan(0.7))]))["class"] == "Core"
    socket = BoundaryFamily([member(-nu / 2, nu) for nu in [2.0 ** -k for k in range(12)]])
    assert classify_boundary(socket)["class"] == "Socket"
    assert classify_boundary(BoundaryFamily([member(-0.3)]))["class"] == "Neither"


def test_classify_monotone_under_adding_members():
    rank = {"Neither": 0, "Socket": 1, "Core": 2}
    base = [member(-0.3)]
    before = classify_boundary(BoundaryFamily(base))["class"]
    for extra in (member(-0.001), member(0.5)):
        after = classify_boundary(BoundaryFamily(base + [extra]))["class"]
        assert rank[after] >= rank[before]
        base, before = base + [extra], after


def test_classify_not_round():
    p = AnalyticProfile("sin", {"amplitude": 0.5, "frequency": 1}, (0, math.pi))
    with pytest.raises(BoundaryNotRound):
        classify_boundary(BoundaryFamily([BoundaryMember(0, p, umbilic_blocks(1.0))]))


def test_pipeline_large_c_falsified():
    cert = disk_lemma_pipeline(2, 4, 0.1, 1.7)
    st = cert.stage("b")
    assert st.verdict == cz.FALSIFIED
    assert [s.verdict for s in cert.stages[2:]] == ["NotRun"] * 3
    w = st.certificates["plateau_sphere_m2"]
    g = disk_fixture(2, 4, 0.1)
    assert 1 / math.tan(1.7) / g.f(w.witness[0]) <= 0


def test_pipeline_rejects_nonconstant_h():
    g = disk_fixture(2, 4, 0.1)
    h = CombinedProfile([(1, g.h), (1, PiecewisePolynomial([0, g.R], [[0.0, 0.0, -0.001]]))])
    bad = doubly_warped(h, g.f, g.n, g.m, markers=g.markers, rho=g.rho)
    with pytest.raises(HypothesisViolated):
        disk_lemma_pipeline(2, 4, 0.1, 0.2, g=bad)
