import numpy as np
import pytest

from riccicert import certify as cz
from riccicert.curvature import ricci_doubly_warped
from riccicert.models import round_metric


def test_affine_field_verified():
    c = cz.certify_positive(lambda r, lam: 1 + lam, [(0, 1), (0, 1)], [101, 101], L=1)
    assert c.verdict == cz.VERIFIED
    assert c.margin == pytest.approx(1 - 0.01 * np.sqrt(2) / 2)


def test_sign_change_falsified_with_witness():
    f = lambda r: r - 0.5
    c = cz.certify_positive(f, [(0, 1)], [101])
    assert c.verdict == cz.FALSIFIED
    assert f(np.array(c.witness[0])) <= 0
    assert cz.recheck(c, f) == []


def test_round_s5_ric_rr_constant():
    g = round_metric(1.0, 2, 2)
    c = cz.certify_positive(lambda r: ricci_doubly_warped(g, r).ric_rr, [(0.1, np.pi / 2 - 0.1)], [512])
    assert c.verdict == cz.VERIFIED
    assert c.grid_min == pytest.approx(4, abs=1e-12)


def test_heuristic_mode_never_verifies():
    c = cz.certify_positive(lambda r: 1 + r, [(0, 1)], [16], mode="heuristic")
    assert c.verdict == cz.GRID_POSITIVE and c.margin == c.grid_min


def test_refine_monotone_and_decides_steep_field():
    f = lambda r: 0.01 + 10 * np.abs(r - 0.5)
    c = cz.certify_positive(f, [(0, 1)], [101], L=10)
    assert c.verdict == cz.INCONCLUSIVE
    c2 = cz.refine(c, 2)
    assert c2.margin > c.margin
    c3 = cz.refine(c2, 2) if c2.verdict == cz.INCONCLUSIVE else c2
    c4 = cz.refine(c3, 2) if c3.verdict == cz.INCONCLUSIVE else c3
    assert c4.verdict == cz.VERIFIED


def test_refine_rejects_decided():
    c = cz.certify_positive(lambda r: r - 0.5, [(0, 1)], [11])
    with pytest.raises(cz.AlreadyDecided):
        cz.refine(c)


def test_errors():
    with pytest.raises(cz.EmptyDomain):
        cz.certify_positive(lambda r: r, [(1, 1)], [8])
    with pytest.raises(cz.NonFiniteFieldValue), np.errstate(divide="ignore"):
        cz.certify_positive(lambda r: 1 / (r - 0.5), [(0, 1)], [11])


def test_supplied_bound_is_sound_under_dense_sampling():
    f = lambda r: 0.2 + np.sin(7 * r) ** 2
    c = cz.certify_positive(f, [(0, 3)], [512], L=7)
    assert c.verdict == cz.VERIFIED
    dense = f(np.linspace(0, 3, 200001))
    assert dense.min() >= c.margin


def test_thread_count_does_not_change_certificate():
    f = lambda r, lam: 1 + np.sin(5 * r) * lam / 2
    a = cz.certify_positive(f, [(0, 1), (0, 1)], [64, 32], threads=1).to_json()
    b = cz.certify_positive(f, [(0, 1), (0, 1)], [64, 32], threads=7).to_json()
    assert a == b


def test_boxes_and_json_round_trip():
    f = lambda r: 0.05 + (r - 0.3) ** 2 * 40
    c = cz.certify_boxes(f, [[(0, 0.5)], [(0.5, 1)]], [64], max_depth=6)
    assert c.verdict == cz.VERIFIED
    d = c.to_json()
    assert cz.PositivityCertificate.from_json(d).to_json() == d
    assert cz.recheck(c, f) == []
