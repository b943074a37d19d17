"""Unit tests for quotient curvature, polarity, crossings and conjugate
point detection."""

import numpy as np
import pytest

from srflab import (
    GeometryError,
    conjugate_witness_search,
    crossing_continuity_probe,
    crossing_number,
    equivariance_coherence_check,
    explosion_probe,
    horizontal_conjugate_test,
    infinitesimal_polarity,
    make_horizontal_geodesic,
    max_quotient_curvature,
    oneill_curvature,
    polarity_test,
    preset,
    random_horizontal_geodesic,
    bounded_curvature_conditions,
    vertical_bracket,
)

E1 = np.array([1.0, 0.0, 0.0, 0.0])


def test_hopf_oneill_curvature_on_link_plane():
    action = preset("hopf")
    x = E1.copy()
    xdir = np.array([0.0, 0.0, 1.0, 0.0])
    ydir = np.array([0.0, 0.0, 0.0, 1.0])
    kappa = oneill_curvature(action, x, xdir, ydir)
    # Quotient of the unit-sphere link is a sphere of curvature 4; the
    # Euclidean cone coordinate removes 1 of that: A-tensor contributes 3.
    assert kappa == pytest.approx(3.0, abs=1e-6)


def test_oneill_rejects_non_horizontal_plane():
    action = preset("hopf")
    with pytest.raises(GeometryError):
        oneill_curvature(action, E1, np.array([0.0, 1.0, 0.0, 0.0]),
                         np.array([0.0, 0.0, 1.0, 0.0]))


def test_vertical_bracket_vanishes_for_polar_action():
    action = preset("torus-std(2)")
    x = np.array([0.6, 0.2, -0.5, 0.9])
    xdir = np.array([0.6, 0.2, 0.0, 0.0])
    xdir /= np.linalg.norm(xdir)
    ydir = np.array([0.0, 0.0, -0.5, 0.9])
    ydir /= np.linalg.norm(ydir)
    vb = vertical_bracket(action, x, xdir, ydir)
    assert np.linalg.norm(vb) < 1e-8


def test_max_quotient_curvature_scale_invariance():
    action = preset("hopf")
    x = E1.copy()
    k1 = max_quotient_curvature(action, x, seed=5)
    k2 = max_quotient_curvature(action, 2.0 * x, seed=5)
    assert k1 * 1.0 == pytest.approx(k2 * 4.0, rel=1e-9)


def test_explosion_probe_hopf_versus_torus():
    hopf = explosion_probe(preset("hopf"), np.zeros(4), E1,
                           [1.0, 0.5, 0.25, 0.125, 0.0625])
    assert hopf.verdict == "quadratic_explosion"
    assert hopf.fitted_limit == pytest.approx(3.0, rel=1e-2)
    torus = explosion_probe(preset("torus-std(2)"), np.zeros(4),
                            np.array([0.5, 0.5, 0.5, 0.5]),
                            [1.0, 0.5, 0.25])
    assert torus.verdict == "bounded"
    assert abs(torus.fitted_limit) < 1e-6


def test_explosion_probe_rejects_regular_center():
    with pytest.raises(GeometryError):
        explosion_probe(preset("hopf"), E1, np.array([0.0, 1.0, 0.0, 0.0]),
                        [1.0, 0.5, 0.25])


@pytest.mark.parametrize("name,expected", [
    ("trivial(4)", "polar"),
    ("so(2)", "forced_polar_by_codim"),
    ("so(3)", "forced_polar_by_codim"),
    ("torus-std(2)", "forced_polar_by_codim"),
    ("hopf", "non_polar"),
    ("circle-weights(1,2)", "non_polar"),
])
def test_polarity_presets(name, expected):
    verdict = polarity_test(preset(name))
    assert verdict.verdict == expected
    assert verdict.is_polar == (expected != "non_polar")


def test_polarity_witness_is_reported():
    verdict = polarity_test(preset("hopf"))
    assert verdict.witness is not None
    point, (xdir, ydir), norm = verdict.witness
    assert norm == pytest.approx(verdict.max_obstruction)
    assert norm > 1e-4


def test_infinitesimal_polarity_at_origin():
    assert infinitesimal_polarity(preset("hopf"), np.zeros(4)).verdict != "polar"
    assert infinitesimal_polarity(preset("so(3)"), np.zeros(3)).is_polar


def test_crossing_numbers_through_origin():
    so3 = preset("so(3)")
    geo = make_horizontal_geodesic(so3, np.array([1.0, 0.0, 0.0]),
                                   np.array([-1.0, 0.0, 0.0]), (0.0, 2.0))
    rec = crossing_number(so3, geo)
    assert rec.total == 2
    assert len(rec.events) == 1
    assert rec.events[0][0] == pytest.approx(1.0, abs=1e-8)

    hopf = preset("hopf")
    through = make_horizontal_geodesic(hopf, E1, -E1, (0.0, 2.0))
    assert crossing_number(hopf, through).total == 1
    missing = make_horizontal_geodesic(hopf, E1, np.array([0.0, 0.0, 1.0, 0.0]),
                                       (0.0, 2.0))
    assert crossing_number(hopf, missing).total == 0


def test_crossing_requires_regular_endpoints():
    so3 = preset("so(3)")
    geo = make_horizontal_geodesic(so3, np.array([1.0, 0.0, 0.0]),
                                   np.array([-1.0, 0.0, 0.0]), (0.0, 1.0))
    with pytest.raises(GeometryError):
        crossing_number(so3, geo)


def test_conjugate_detection_hopf_witness():
    action = preset("hopf")
    alpha = np.pi / 4
    v = np.array([-np.cos(alpha), 0.0, np.sin(alpha), 0.0])
    geo = make_horizontal_geodesic(action, E1, v, (0.0, 2.0))
    rep = horizontal_conjugate_test(action, geo)
    assert rep.has_conjugate
    assert rep.ind_lambda == 1
    assert rep.ind_w == 0
    assert not rep.regular_start_identity


def test_no_conjugate_points_on_polar_quotient():
    action = preset("torus-std(2)")
    rng = np.random.default_rng(11)
    for _ in range(4):
        geo = random_horizontal_geodesic(action, rng)
        rep = horizontal_conjugate_test(action, geo)
        assert not rep.has_conjugate
        assert rep.regular_start_identity


def test_conjugate_witness_search_finds_hopf_example():
    hit = conjugate_witness_search(preset("hopf"), n_trials=32, seed=0)
    assert hit is not None
    _, rep = hit
    assert rep.has_conjugate


def test_continuity_probe_polar_is_continuous():
    action = preset("so(2)")
    start = (np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    end = (np.array([0.8, 0.6]), np.array([-0.8, -0.6]))
    rep = crossing_continuity_probe(action, start, end, n_steps=8)
    assert rep.verdict == "continuous"
    assert rep.jumps == ()


def test_continuity_probe_hopf_jump_is_witnessed():
    action = preset("hopf")
    start = (E1, -E1)
    end = (E1, np.array([-0.7, 0.0, np.sqrt(1.0 - 0.49), 0.0]))
    rep = crossing_continuity_probe(action, start, end, n_steps=16)
    assert rep.verdict == "discontinuity found"
    assert len(rep.jumps) >= 1
    cs = [c for _, c in rep.rows]
    assert cs[0] == 1 and cs[-1] == 0


def test_equivariance_of_horizontal_geodesics():
    action = preset("so(3)")
    geo = make_horizontal_geodesic(action, np.array([1.0, 0.0, 0.0]),
                                   np.array([1.0, 0.0, 0.0]), (0.0, 2.0))
    dev = equivariance_coherence_check(action, geo, action.algebra[0])
    assert dev < 1e-12


def test_curvature_conditions_agree_per_action():
    for name, all_good in [("so(3)", True), ("hopf", False)]:
        conditions = bounded_curvature_conditions(preset(name))
        triple = (conditions["kappa_bounded"], conditions["product_to_zero"],
                  conditions["slice_polar"])
        assert triple == (all_good,) * 3
