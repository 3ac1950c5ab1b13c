"""Acceptance suite: one line per criterion, tolerances pinned."""
import json
import math
import re
import time
from fractions import Fraction

import numpy as np

from riccicert import certify as cz
from riccicert.cli import fixture_path
from riccicert.convexity import (build_xi, disk_lemma_pipeline, fd_shape_operator, glue_check,
                                 sff_graph, umbilic_blocks)
from riccicert.curvature import (doubly_warped, fd_ricci_oracle, ricci_doubly_warped,
                                 sectional_singly_warped, singly_warped)
from riccicert.isotopy import (HypothesisViolated, certify_metric, certify_path, connect_boundary_path,
                               stage_one_path, stage_two_path)
from riccicert.models import disk_fixture, docking_profile, random_spline_metric, round_metric, s5_fixture
from riccicert.profiles import AnalyticProfile, CombinedProfile, PiecewisePolynomial, hermite_cubic
from riccicert.topo import (ComponentLedger, LensSpace, PontryaginData, bp_order_report,
                            component_ledger_eval, genus, lens_admissible, lens_search, lower_bound,
                            mult_seq_polynomials)

ROUND_TOL = 1e-9
ORACLE_TOL = 1e-6
OFFDIAG_TOL = 1e-7
PLATEAU_TOL = 1e-9
BP_EXPECTED = {2: 28, 3: 992, 4: 8128, 5: 130816}


def test_criterion_1_round_identity(criterion):
    t = time.perf_counter()
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        g = round_metric(a, 2, 2)
        lo, hi = g.interval
        r = np.linspace(lo, hi, 102)[1:-1]
        ric = ricci_doubly_warped(g, r)
        for comp in ric.as_tuple():
            worst = max(worst, float(np.max(np.abs(comp - 4 / a ** 2))))
    dt = time.perf_counter() - t
    criterion(1, worst <= ROUND_TOL and dt < 1, f"max error {worst:.2e} (tol {ROUND_TOL:g}), {dt:.2f}s (< 1s)")


def test_criterion_2_oracle_equivalence(criterion):
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = off = 0.0
    for _ in range(10):
        g = random_spline_metric(rng)
        a, b = g.interval
        for r in rng.uniform(a + 0.01, b - 0.01, 100):
            o = fd_ricci_oracle(g, r)
            c = ricci_doubly_warped(g, r).as_tuple()
            worst = max(worst, max(abs(x - y) for x, y in zip(o.diagonal, c)))
            off = max(off, o.offdiag_max)
    dt = time.perf_counter() - t
    ok = worst <= ORACLE_TOL and off < OFFDIAG_TOL and dt < 10
    criterion(2, ok, f"max |closed - oracle| {worst:.2e} (tol {ORACLE_TOL:g}), "
                     f"off-diagonal {off:.2e} (< {OFFDIAG_TOL:g}), {dt:.2f}s (< 10s)")


def test_criterion_3_paths_end_to_end(criterion):
    t = time.perf_counter()
    g = s5_fixture()
    p1 = stage_one_path(g)
    c1 = certify_path(p1, grid=(512, 64), mode="certified")
    p2 = stage_two_path(p1.metric_at(1.0))
    c2 = certify_path(p2, grid=(512, 64), mode="certified")
    closed = all(r.passed for r in p2.closure_reports([2.0])[0][1])
    dt = time.perf_counter() - t
    ok = c1.verdict == c2.verdict == cz.VERIFIED and closed and dt < 60
    criterion(3, ok, f"stage one {c1.verdict}, stage two {c2.verdict}, "
                     f"round closure at lambda=2 {'passed' if closed else 'failed'}, {dt:.2f}s (< 60s)")


def test_criterion_4_plateau_sff(criterion):
    t = time.perf_counter()
    g = disk_fixture(2, 4, 0.1)
    worst = 0.0
    for c in (0.1, 0.3, math.pi / 4):
        xi = build_xi(g, c)
        for r in np.linspace(0.05, xi.r_p - 0.05, 5):
            ob, _ = fd_shape_operator(g, xi, float(r))
            want = (0.0, 0.0, 1 / math.tan(c) / g.f(float(r)))
            got = (ob.tangent, ob.sphere_n, ob.sphere_m2)
            worst = max(worst, max(abs(float(x) - y) for x, y in zip(got, want)))
    dt = time.perf_counter() - t
    criterion(4, worst <= PLATEAU_TOL and dt < 5,
              f"max |oracle - (0, 0, cot c / f)| {worst:.2e} (tol {PLATEAU_TOL:g}), {dt:.2f}s (< 5s)")


def test_criterion_5_disk_pipeline(criterion):
    t = time.perf_counter()
    verdicts = {}
    for rho in (0.1, 0.01):
        cert = disk_lemma_pipeline(2, 4, rho, 0.2)
        verdicts[rho] = [s.verdict for s in cert.stages]
    dt = time.perf_counter() - t
    ok = all(v == [cz.VERIFIED] * 5 for v in verdicts.values()) and dt < 180
    text = "; ".join(f"rho={k}: {','.join(v)}" for k, v in verdicts.items())
    criterion(5, ok, f"{text}, {dt:.1f}s (< 180s)")


def test_criterion_6_lens_examples(criterion):
    t = time.perf_counter()
    res = lens_search(3, 2)
    adm = lens_admissible(LensSpace(5, (1, 1, 2, 2)))
    dt = time.perf_counter() - t
    ok = res.exhaustive and res.tuples == [] and adm is True and dt < 1
    criterion(6, ok, f"lens_search(3,2) exhaustive={res.exhaustive} classes={res.tuples}, "
                     f"L(5;1,1,2,2) admissible={adm}, {dt:.3f}s (< 1s)")


def test_criterion_7_bp_order(criterion):
    t = time.perf_counter()
    got, agree = {}, True
    for k in BP_EXPECTED:
        rep = bp_order_report(k)
        got[k] = rep["b_k"]
        agree &= rep["closed_form"] == rep["a_k_form"] == rep["table"]
    dt = time.perf_counter() - t
    ok = got == BP_EXPECTED and agree and dt < 1
    bad = {k: (got[k], v) for k, v in BP_EXPECTED.items() if got[k] != v}
    criterion(7, ok, f"b_k={got}, closed form and table agree={agree}, "
                     f"mismatches (got, expected)={bad}, {dt:.3f}s (< 1s)")


def test_criterion_8_multiplicative_sequences(criterion):
    t = time.perf_counter()
    routes = all(mult_seq_polynomials(s, 5, "splitting") == mult_seq_polynomials(s, 5, "newton")
                 for s in ("ahat", "l"))
    a1 = mult_seq_polynomials("ahat", 1)[0]
    l1 = mult_seq_polynomials("l", 1)[0]
    with open(fixture_path("p1_3.json")) as fh:
        sig = genus(PontryaginData.from_json(json.load(fh)), "l")
    dt = time.perf_counter() - t
    ok = (routes and a1 == {(1,): Fraction(-1, 24)} and l1 == {(1,): Fraction(1, 3)}
          and sig == 1 and dt < 5)
    criterion(8, ok, f"routes agree for k<=5: {routes}, A1={a1}, L1={l1}, "
                     f"L-genus(p1=3)={sig}, {dt:.2f}s (< 5s)")


def test_criterion_9_ledger(criterion):
    t = time.perf_counter()
    led = component_ledger_eval(ComponentLedger(2, range(-10, 11), c=1, s0=0))
    zero = sorted(k for k, v in led["ahat_gaps"].items() if v == 0)
    diagonal_only = zero == sorted((q, q) for q in range(-10, 11))
    classes = led["s_classes"]
    pairs = len(classes) == 11 and all(set(c) == {q, -q} for c in classes for q in c)
    bounds = [lower_bound(m, 2) for m in (27, 28, 100)]
    exact = all(isinstance(v, Fraction) for v in led["ahat_gaps"].values())
    dt = time.perf_counter() - t
    ok = diagonal_only and pairs and bounds == [0, 1, 3] and exact and dt < 1
    criterion(9, ok, f"gaps vanish only on the diagonal: {diagonal_only}, {len(classes)} classes "
                     f"of {{q, -q}}: {pairs}, floor(m/28) for 27, 28, 100 = {bounds}, {dt:.3f}s (< 1s)")


# ---- falsification soundness ----

def _expect_falsified(cert, field):
    return cert.verdict == cz.FALSIFIED and not cz.recheck(cert, field)


def _path_falsified(cert, path):
    bad = [k for k, c in cert.components.items() if c.verdict == cz.FALSIFIED]
    return bool(bad) and all(not cz.recheck(cert.components[k], path.field(k)) for k in bad)


def _raises(fn, check):
    try:
        fn()
    except HypothesisViolated as e:
        return check(e)
    return False


def _closure_witness(p, e):
    order = int(re.search(r"order (\d)", e.condition).group(1))
    w = float(e.witness)
    want = {0: 0.0, 1: 1.0 if w < p.b / 2 else -1.0, 2: 0.0}[order]
    return abs(p.derivs(w)[order] - want) > 1e-8


def _sine(S, extra=None):
    base = AnalyticProfile("sin", {"amplitude": S / math.pi, "frequency": math.pi / S}, (0, S))
    return base if extra is None else CombinedProfile([(1, base), (1, extra)])


def _bump(a, b, eps, S):
    L = b - a
    mid = [0, 0, 0, eps * L ** 3, -3 * eps * L ** 2, 3 * eps * L, -eps]
    return PiecewisePolynomial([0, a, b, S], [[0.0], mid, [0.0]])


def _violations():
    s5 = s5_fixture()
    disk = disk_fixture(2, 4, 0.1)
    S = 2.5
    out = []

    def certify_case(name, field, domain, **kw):
        out.append((name, lambda: _expect_falsified(cz.certify_positive(field, domain, **kw), field)))

    certify_case("sine sign change", lambda r: np.sin(2 * np.pi * r), [(0.1, 0.9)])
    certify_case("r - lambda", lambda r, lam: r - lam, [(0, 1), (0, 1)])
    certify_case("three-dimensional plane", lambda x, y, z: x + y + z - 1, [(0, 1)] * 3, grid=[17] * 3)
    certify_case("heuristic mode", lambda r: r - 0.5, [(0, 1)], mode="heuristic")
    certify_case("supplied bound", lambda r: np.cos(3 * r), [(0, 1)], L=3.0)

    def composite():
        fn = lambda r: 1.5 - r
        return _expect_falsified(cz.certify_boxes(fn, [[(0, 1)], [(1, 2)]], [65]), fn)
    out.append(("composite boxes", composite))

    def sectional():
        p = PiecewisePolynomial([0, 1], [[1.0, 0.0, 1.0]])
        g = singly_warped(p, 3)
        c = certify_metric(g, grid=128)
        bad = c.components["K_radial"]
        return (c.verdict == cz.FALSIFIED and bad.verdict == cz.FALSIFIED
                and sectional_singly_warped(g, bad.witness[0], guard=False)[0] <= 0)
    out.append(("p = 1 + s^2 sectional", sectional))

    def uncorrected():
        g = docking_profile()
        path = connect_boundary_path(g.p, g.q, variant="uncorrected")
        return _path_falsified(certify_path(path, grid=(128, 16)), path)
    out.append(("connect with slope pi target", uncorrected))

    def bump_connect():
        p = _sine(S, _bump(1.0, 1.4, 2000.0, S))
        return _raises(lambda: connect_boundary_path(p, 2), lambda e: p.derivs(e.witness)[2] >= 0)
    out.append(("convexity defect in boundary profile", bump_connect))

    def nonconstant_h():
        h = CombinedProfile([(1, s5.h), (1, PiecewisePolynomial([0, s5.R], [[0.0, 0.01]]))])
        bad = doubly_warped(h, s5.f, 2, 2, markers=s5.markers, rho=s5.rho)
        return _raises(lambda: stage_one_path(bad), lambda e: _h_witness(bad, e))
    out.append(("stage one with non-constant h", nonconstant_h))

    def wrong_f():
        f = AnalyticProfile("cos", {"amplitude": 1, "frequency": 1}, (0, s5.R))
        bad = doubly_warped(s5.h, f, 2, 2, markers=s5.markers, rho=s5.rho)
        return _raises(lambda: stage_one_path(bad), lambda e: f.derivs(e.witness)[2] <= 0)
    out.append(("stage one with f'' < 0 near the pole", wrong_f))

    def stage_two_unmodified():
        return _raises(lambda: stage_two_path(s5),
                       lambda e: s5.f.derivs(e.witness)[2] >= 0 or s5.h.derivs(e.witness)[2] > 0)
    out.append(("stage two on an inflected f", stage_two_unmodified))

    def glue_equators():
        z = umbilic_blocks(0.0, 5)
        v = glue_check(z, z)
        return v.verdict == cz.FALSIFIED and v.witness["sum"] <= 0
    out.append(("glue two equators", glue_equators))

    def glue_negative():
        a, b = umbilic_blocks(0.2, 4), umbilic_blocks(-0.5, 4)
        v = glue_check(a, b)
        w = v.witness
        return (v.verdict == cz.FALSIFIED
                and a.as_dict()[w["block"]][w["index"]] + b.as_dict()[w["block"]][w["index"]] <= 0)
    out.append(("glue a weakly concave block", glue_negative))

    def large_c():
        st = disk_lemma_pipeline(2, 4, 0.1, 1.7).stage("b")
        w = st.certificates["plateau_sphere_m2"]
        return st.verdict == cz.FALSIFIED and 1 / math.tan(1.7) / disk.f(w.witness[0]) <= 0
    out.append(("plateau angle past pi/2", large_c))

    def pipeline_h():
        h = CombinedProfile([(1, disk.h), (1, PiecewisePolynomial([0, disk.R], [[0.0, 0.0, -0.001]]))])
        bad = doubly_warped(h, disk.f, disk.n, disk.m, markers=disk.markers, rho=disk.rho)
        return _raises(lambda: disk_lemma_pipeline(2, 4, 0.1, 0.2, g=bad), lambda e: _h_witness(bad, e))
    out.append(("disk pipeline with non-constant h", pipeline_h))

    for side, slopes in (("left", (0.3, 0.0)), ("right", (0.0, -0.3))):
        def closure(slopes=slopes):
            p = _sine(S, hermite_cubic(0.0, S, 0.0, slopes[0], 0.0, slopes[1]))
            return _raises(lambda: connect_boundary_path(p, 2), lambda e: _closure_witness(p, e))
        out.append((f"closure defect at the {side} end", closure))

    def convex_graph():
        def field(r):
            h = (np.sin(r), np.cos(r), -np.sin(r))
            f = (np.cos(r), -np.sin(r), -np.cos(r))
            xi = (0.3 + 2 * r * r, 4 * r, 4 + 0 * r)
            return sff_graph(h, f, xi).tangent
        return _expect_falsified(cz.certify_positive(field, [(0.1, 0.6)], grid=[257]), field)
    out.append(("convex colatitude graph", convex_graph))

    def negative_ricci():
        p = PiecewisePolynomial([0, 1], [[1.0, 0.0, 1.0]])
        g = doubly_warped(p, p, 2, 2)
        c = certify_metric(g, grid=128)
        bad = c.components["ric_rr"]
        return bad.verdict == cz.FALSIFIED and ricci_doubly_warped(g, bad.witness[0], guard=False).ric_rr <= 0
    out.append(("negative Ricci warped product", negative_ricci))
    return out


def _h_witness(g, e):
    w = float(e.witness)
    rho = float(g.rho)
    if "h''" in e.condition:
        return g.h.derivs(w)[2] >= 0
    return abs(g.h(w) - rho) > 1e-9


def test_criterion_10_falsification_soundness(criterion):
    t = time.perf_counter()
    cases = _violations()
    failed = []
    for name, run in cases:
        try:
            ok = bool(run())
        except Exception as exc:  # an unexpected error is a failed case
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        if not ok:
            failed.append(name)
    dt = time.perf_counter() - t
    ok = len(cases) == 20 and not failed and dt < 30
    criterion(10, ok, f"{len(cases) - len(failed)}/{len(cases)} violations caught with re-checked "
                      f"witnesses, failures={failed}, {dt:.2f}s (< 30s)")
