"""Unit tests for Jacobi fields, families, focal scans and index splitting."""

import numpy as np
import pytest

from srflab import (
    AmbientSpace,
    GeometryError,
    HorizontalGeodesic,
    JacobiFamily,
    JacobiField,
    focal_scan,
    index,
    leaf_lagrangian,
    make_horizontal_geodesic,
    preset,
    symplectic_complement,
    vertical_family,
    quotient_focal_index,
    wronskian,
)


def _line(n=3, length=2.0):
    base = np.zeros(n)
    base[0] = 1.0
    direction = np.zeros(n)
    direction[1] = 1.0
    return HorizontalGeodesic(AmbientSpace(n, 0.0), base, direction, (0.0, length))


def _great_circle(curvature=1.0, n=3, length=None):
    space = AmbientSpace(n, curvature)
    x = np.zeros(n)
    x[0] = space.radius
    v = np.zeros(n)
    v[1] = 1.0
    if length is None:
        length = 2 * np.pi * space.radius
    return HorizontalGeodesic(space, x, v, (0.0, length))


def test_euclidean_jacobi_fields_are_affine():
    geo = _line()
    f = JacobiField(geo, np.array([1.0, 0.0]), np.array([0.5, 0.0]))
    ts = np.linspace(0, 2, 9)
    assert np.allclose(f.value(ts)[:, 0], 1.0 + 0.5 * ts)
    assert np.allclose(f.derivative(ts)[:, 0], 0.5)


def test_sphere_jacobi_fields_are_trigonometric():
    geo = _great_circle(4.0)
    f = JacobiField(geo, np.array([1.0]), np.array([0.0]))
    ts = np.linspace(0, np.pi, 7)
    assert np.allclose(f.value(ts)[:, 0], np.cos(2 * ts))
    assert np.allclose(f.derivative(ts)[:, 0], -2 * np.sin(2 * ts))


def test_ambient_value_lies_in_normal_bundle():
    geo = _great_circle(1.0, n=4)
    f = JacobiField(geo, np.array([0.3, -0.1]), np.array([0.2, 0.7]))
    for t in (0.0, 1.1, 3.0):
        amb = f.ambient_value(t)
        assert abs(amb @ geo.point(t)) < 1e-12
        assert abs(amb @ geo.velocity(t)) < 1e-12


def test_from_ambient_round_trip():
    geo = _great_circle(1.0, n=4)
    e = geo.normal_frame()
    f = JacobiField.from_ambient(geo, e @ np.array([0.4, 0.1]), e @ np.array([-0.2, 0.9]))
    assert np.allclose(f.j0, [0.4, 0.1])
    assert np.allclose(f.j0p, [-0.2, 0.9])
    with pytest.raises(GeometryError):
        JacobiField.from_ambient(geo, geo.velocity(0.0), np.zeros(4))


def test_wronskian_constant_along_geodesic():
    geo = _great_circle(2.0, n=5)
    rng = np.random.default_rng(7)
    nu = geo.normal_dim
    f1 = JacobiField(geo, rng.standard_normal(nu), rng.standard_normal(nu))
    f2 = JacobiField(geo, rng.standard_normal(nu), rng.standard_normal(nu))
    omega0 = wronskian(f1, f2)
    ts = np.linspace(*geo.interval, 41)
    omega_t = np.einsum("ti,ti->t", f1.derivative(ts), f2.value(ts)) \
        - np.einsum("ti,ti->t", f1.value(ts), f2.derivative(ts))
    assert np.max(np.abs(omega_t - omega0)) < 1e-12 * (1.0 + abs(omega0))


def test_family_validation():
    geo = _line(3)
    f = JacobiField(geo, np.array([1.0, 0.0]), np.array([0.0, 0.0]))
    with pytest.raises(GeometryError):
        JacobiFamily(geo, (f, f), "general")  # dependent members
    g = JacobiField(geo, np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(GeometryError):
        JacobiFamily(geo, (f, g), "isotropic")  # omega(f, g) = -1


def test_lagrangian_family_needs_full_size():
    geo = _line(3)
    f = JacobiField(geo, np.array([1.0, 0.0]), np.array([0.0, 0.0]))
    with pytest.raises(GeometryError):
        JacobiFamily(geo, (f,), "lagrangian")
    g = JacobiField(geo, np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    fam = JacobiFamily(geo, (f, g), "lagrangian")
    assert fam.size == 2


def test_sphere_conjugate_point_at_pi():
    geo = _great_circle(1.0, n=3, length=1.5 * np.pi)
    spray = JacobiFamily(geo, (JacobiField(geo, np.array([0.0]), np.array([1.0])),),
                         "lagrangian")
    report = focal_scan(spray, include_endpoints=(False, False))
    assert len(report.events) == 1
    t, drop = report.events[0]
    assert t == pytest.approx(np.pi, abs=1e-8)
    assert drop == 1
    assert report.total_index == 1


def test_focal_scan_endpoint_flags():
    geo = _great_circle(1.0, n=3, length=1.5 * np.pi)
    spray = JacobiFamily(geo, (JacobiField(geo, np.array([0.0]), np.array([1.0])),),
                         "lagrangian")
    closed = focal_scan(spray, include_endpoints=(True, True))
    assert closed.total_index == 2  # vanishing left endpoint now counts
    assert index(spray, include_endpoints=(False, False)) == 1


def test_leaf_lagrangian_dimension_and_kind():
    action = preset("so(3)")
    geo = make_horizontal_geodesic(action, np.array([1.0, 0.0, 0.0]),
                                   np.array([1.0, 0.0, 0.0]), (0.0, 2.0))
    lam = leaf_lagrangian(action, geo)
    assert lam.kind == "lagrangian"
    assert lam.size == geo.normal_dim


def test_vertical_family_dimension_tracks_leaves():
    action = preset("so(2)")
    geo = make_horizontal_geodesic(action, np.array([1.0, 0.0]),
                                   np.array([-1.0, 0.0]), (-0.5, 2.0))
    w = vertical_family(action, geo)
    assert w.size == 1
    assert w.kind == "isotropic"
    # The Killing restriction vanishes exactly where the line meets the origin.
    rep = focal_scan(w, include_endpoints=(False, False))
    assert len(rep.events) == 1
    assert rep.events[0][0] == pytest.approx(1.0, abs=1e-8)


def test_symplectic_complement_size():
    geo = _line(3)
    f = JacobiField(geo, np.array([1.0, 0.0]), np.array([0.0, 0.0]))
    fam = JacobiFamily(geo, (f,), "isotropic")
    comp = symplectic_complement(fam)
    assert comp.size == 2 * geo.normal_dim - 1


def test_index_decomposition_single_case():
    action = preset("hopf")
    x = np.array([1.0, 0.0, 0.0, 0.0])
    alpha = np.pi / 4
    v = np.array([-np.cos(alpha), 0.0, np.sin(alpha), 0.0])
    geo = make_horizontal_geodesic(action, x, v, (0.0, 2.0))
    lam = leaf_lagrangian(action, geo)
    w = vertical_family(action, geo)
    open_flags = (False, False)
    ind_lam = index(lam, include_endpoints=open_flags)
    ind_w = index(w, include_endpoints=open_flags)
    quotient = quotient_focal_index(w, lam, include_endpoints=open_flags)
    assert ind_lam == ind_w + quotient
    assert ind_lam == 1
    assert quotient == 1  # horizontal conjugate point at t = 1 / cos(alpha)
