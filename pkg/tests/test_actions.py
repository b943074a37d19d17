"""Unit tests for action specifications, presets and stratification."""

import numpy as np
import pytest

from srflab import (
    ActionSpec,
    AmbientSpace,
    GeometryError,
    ScenarioError,
    foliation_codim,
    horizontal_space,
    is_regular_point,
    isotropy_algebra,
    leaf_dimension,
    leaf_tangent,
    make_horizontal_geodesic,
    preset,
    regular_dimension,
    slice_representation,
    stratum_of,
)

E1 = np.array([1.0, 0.0, 0.0, 0.0])


def test_generators_must_be_skew():
    with pytest.raises(GeometryError):
        ActionSpec(AmbientSpace(2, 0.0), (np.eye(2),))


def test_preset_lookup_and_errors():
    assert preset("so(3)").space.dimension == 3
    assert preset("hopf").space.dimension == 4
    assert preset("torus-std(2)").algebra_dim == 2
    assert preset("circle-weights(1,2)").algebra_dim == 1
    assert preset("trivial(4)").algebra_dim == 0
    with pytest.raises(ScenarioError):
        preset("nosuch")


def test_dependent_generators_are_deduplicated():
    a = np.array([[0.0, -1.0], [1.0, 0.0]])
    action = ActionSpec(AmbientSpace(2, 0.0), (a, 2.0 * a, -a))
    assert action.algebra_dim == 1


def test_leaf_dimensions_so3():
    action = preset("so(3)")
    assert leaf_dimension(action, np.zeros(3)) == 0
    assert leaf_dimension(action, np.array([1.0, 0.0, 0.0])) == 2
    assert regular_dimension(action) == 2
    assert foliation_codim(action) == 1
    assert is_regular_point(action, np.array([0.3, -0.2, 0.9]))
    assert not is_regular_point(action, np.zeros(3))


def test_leaf_tangent_is_orthogonal_to_radius():
    action = preset("so(3)")
    x = np.array([0.0, 0.0, 2.0])
    sub = leaf_tangent(action, x)
    assert sub.rank == 2
    assert np.allclose(sub.basis.T @ x, 0.0, atol=1e-12)
    h = horizontal_space(action, x)
    assert h.rank == 1
    assert h.contains(x / np.linalg.norm(x))


def test_isotropy_algebra_at_pole():
    action = preset("so(3)")
    iso = isotropy_algebra(action, np.array([0.0, 0.0, 1.0]))
    assert len(iso) == 1
    assert np.allclose(iso[0] @ np.array([0.0, 0.0, 1.0]), 0.0, atol=1e-12)


def test_hopf_stratification():
    action = preset("hopf")
    assert foliation_codim(action) == 3
    info = stratum_of(action, np.zeros(4))
    assert info.leaf_dim == 0
    assert info.quotient_codim == 3
    assert not info.forced_polar
    reg = stratum_of(action, E1)
    assert reg.leaf_dim == 1
    assert reg.quotient_codim == 0


def test_torus_stratification():
    action = preset("torus-std(2)")
    assert foliation_codim(action) == 2
    assert stratum_of(action, np.zeros(4)).quotient_codim == 2
    assert stratum_of(action, E1).quotient_codim == 1
    assert stratum_of(action, np.array([0.5, 0.5, 0.5, 0.5])).quotient_codim == 0


def test_so3_origin_quotient_codim():
    info = stratum_of(preset("so(3)"), np.zeros(3))
    assert info.quotient_codim == 1
    assert info.forced_polar


def test_slice_representation_dimensions():
    action = preset("hopf")
    sl = slice_representation(action, np.zeros(4))
    assert sl.space.dimension == 4
    assert sl.algebra_dim == 1
    reg = slice_representation(action, E1)
    assert reg.algebra_dim == 0


def test_make_horizontal_geodesic_validation():
    action = preset("so(3)")
    x = np.array([1.0, 0.0, 0.0])
    geo = make_horizontal_geodesic(action, x, x, (0.0, 1.0))
    assert np.allclose(geo.direction, x)
    with pytest.raises(GeometryError):
        # Not horizontal: tangent to the orbit sphere.
        make_horizontal_geodesic(action, x, np.array([0.0, 1.0, 0.0]), (0.0, 1.0))


def test_killing_values_shape_and_linearity():
    action = preset("torus-std(2)")
    pts = np.random.default_rng(1).standard_normal((5, 4))
    vals = action.killing_values(pts)
    assert vals.shape == (5, 4, 2)
    assert np.allclose(action.killing_values(2.0 * pts), 2.0 * vals)
