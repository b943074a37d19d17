"""Orbit foliations of connected linear isometry groups.

An action is given by a list of skew-symmetric generator matrices; the
Killing field of a generator A is x -> A x.  Leaves are group orbits, their
tangent spaces are spans of Killing vectors, and all stratification data
(leaf dimension, isotropy, slice representations) is derived from rank
computations on those spans.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ScenarioError
from .geometry import (
    DEFAULT_TOL,
    AmbientSpace,
    HorizontalGeodesic,
    Subspace,
    ToleranceProfile,
    null_space_with_tol,
    orthogonal_complement,
    rank_with_tol_matrix,
)

SKEW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ActionSpec:
    """A connected linear isometry group, given through Lie-algebra generators.

    generators may be linearly dependent or empty (trivial foliation by
    points); an orthonormalized internal basis of their span is kept in
    `algebra`.
    """

    space: AmbientSpace
    generators: tuple = ()
    name: str | None = None

    def __post_init__(self):
        n = self.space.dimension
        gens = []
        for i, a in enumerate(self.generators):
            a = np.asarray(a, dtype=float)
            if a.shape != (n, n):
                raise GeometryError(f"generator {i} has shape {a.shape}, expected ({n}, {n})")
            norm = np.linalg.norm(a)
            if norm > 0 and np.linalg.norm(a + a.T) > SKEW_TOL * norm * 10:
                raise GeometryError(
                    f"generator {i} is not skew-symmetric "
                    f"(|A + A^T| / |A| = {np.linalg.norm(a + a.T) / norm:.3e})"
                )
            gens.append(a)
        object.__setattr__(self, "generators", tuple(gens))
        object.__setattr__(self, "algebra", self._orthonormal_algebra(gens, n))
        object.__setattr__(self, "_cache", {})

    @staticmethod
    def _orthonormal_algebra(gens, n):
        if not gens:
            return ()
        flat = np.array([a.ravel() for a in gens]).T
        u, s, _ = np.linalg.svd(flat, full_matrices=False)
        if s.size == 0 or s[0] < 1e-14:
            return ()
        rank = int(np.sum(s >= 1e-12 * s[0]))
        return tuple(u[:, j].reshape(n, n) for j in range(rank))

    @property
    def algebra_dim(self) -> int:
        return len(self.algebra)

    def killing_values(self, points):
        """Killing vectors of the internal algebra basis at one or many points.

        points (..., n) -> array (..., n, m) whose columns span the leaf
        tangent spaces.
        """
        pts = np.asarray(points, dtype=float)
        if self.algebra_dim == 0:
            return np.zeros(pts.shape + (0,))
        stack = np.stack(self.algebra, axis=0)  # (m, n, n)
        return np.einsum("gij,...j->...ig", stack, pts)


def leaf_tangent(action: ActionSpec, x, profile: ToleranceProfile = DEFAULT_TOL) -> Subspace:
    """Tangent space of the leaf (orbit) through x, span{A_i x}."""
    x = action.space.check_point(x)
    _, sub = rank_with_tol_matrix(action.killing_values(x), profile)
    return sub


def leaf_dimension(action: ActionSpec, x, profile: ToleranceProfile = DEFAULT_TOL) -> int:
    x = action.space.check_point(x)
    rank, _ = rank_with_tol_matrix(action.killing_values(x), profile)
    return rank


def sample_points(action: ActionSpec, n_samples: int, seed: int = 0) -> np.ndarray:
    """Seeded random points of the ambient space, (n_samples, n)."""
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n_samples, action.space.dimension))
    if action.space.is_sphere:
        pts /= np.linalg.norm(pts, axis=1, keepdims=True) * np.sqrt(action.space.curvature)
    return pts


def regular_dimension(action: ActionSpec, profile: ToleranceProfile = DEFAULT_TOL,
                      n_samples: int = 64, seed: int = 0) -> int:
    """Leaf dimension at regular points, estimated as the max over a seeded
    sample (regular points are open and dense, so this is a.s. exact)."""
    key = ("regdim", profile, n_samples, seed)
    cache = action._cache
    if key not in cache:
        dims = [leaf_dimension(action, p, profile)
                for p in sample_points(action, n_samples, seed)]
        cache[key] = max(dims) if dims else 0
    return cache[key]


def foliation_codim(action: ActionSpec, profile: ToleranceProfile = DEFAULT_TOL,
                    n_samples: int = 64, seed: int = 0) -> int:
    """Codimension of the foliation: manifold dimension minus regular leaf
    dimension (the cohomogeneity of the quotient)."""
    return action.space.manifold_dim - regular_dimension(action, profile, n_samples, seed)


def is_regular_point(action: ActionSpec, x, profile: ToleranceProfile = DEFAULT_TOL) -> bool:
    return leaf_dimension(action, x, profile) == regular_dimension(action, profile)


@dataclass(frozen=True)
class StratumInfo:
    """Stratification data at a point.

    quotient_codim is the codimension, in the local quotient, of the image of
    the stratum through the point: the dimension of the normal slice modulo
    its fixed directions, minus the regular leaf dimension of the slice
    action.  Values <= 2 force local polarity.
    """

    leaf_dim: int
    cohomogeneity: int
    quotient_codim: int

    @property
    def forced_polar(self) -> bool:
        return self.quotient_codim <= 2


def isotropy_algebra(action: ActionSpec, x, profile: ToleranceProfile = DEFAULT_TOL):
    """Basis (list of matrices) of {A in span(generators) : A x = 0}."""
    x = action.space.check_point(x)
    if action.algebra_dim == 0:
        return []
    eval_map = action.killing_values(x)  # (n, m)
    coeffs = null_space_with_tol(eval_map, profile)  # (m, k)
    stack = np.stack(action.algebra, axis=0)
    return [np.einsum("g,gij->ij", c, stack) for c in coeffs.T]


def tangent_space(action: ActionSpec, x) -> Subspace:
    """Tangent space of the ambient manifold at x (all of R^n, or x-perp)."""
    n = action.space.dimension
    if not action.space.is_sphere:
        return Subspace.full(n)
    x = action.space.check_point(x)
    radial = Subspace(n, (x * np.sqrt(action.space.curvature)).reshape(n, 1))
    return orthogonal_complement(radial)


def horizontal_space(action: ActionSpec, x, profile: ToleranceProfile = DEFAULT_TOL) -> Subspace:
    """Orthogonal complement of the leaf tangent inside the manifold tangent."""
    x = action.space.check_point(x)
    return orthogonal_complement(leaf_tangent(action, x, profile), tangent_space(action, x))


def slice_representation(action: ActionSpec, x, profile: ToleranceProfile = DEFAULT_TOL) -> ActionSpec:
    """Euclidean action of the isotropy algebra on the normal space of the
    orbit, expressed in an orthonormal basis of that normal space."""
    x = action.space.check_point(x)
    h = horizontal_space(action, x, profile)
    q = h.basis  # (n, d)
    d = q.shape[1]
    gens = []
    for b in isotropy_algebra(action, x, profile):
        restricted = q.T @ b @ q
        restricted = 0.5 * (restricted - restricted.T)  # kill round-off symmetric part
        gens.append(restricted)
    label = f"slice({action.name})" if action.name else None
    return ActionSpec(AmbientSpace(max(d, 2), 0.0), _pad_generators(gens, d), name=label)


def _pad_generators(gens, d):
    # AmbientSpace requires dimension >= 2; embed a 1-dimensional (or
    # 0-dimensional) slice in R^2 with zero-padded generators.
    if d >= 2:
        return tuple(gens)
    padded = []
    for g in gens:
        z = np.zeros((2, 2))
        z[:d, :d] = g
        padded.append(z)
    return tuple(padded)


def stratum_of(action: ActionSpec, x, profile: ToleranceProfile = DEFAULT_TOL) -> StratumInfo:
    """Leaf dimension, cohomogeneity, and quotient codimension at x."""
    x = action.space.check_point(x)
    ldim = leaf_dimension(action, x, profile)
    slice_rep = slice_representation(action, x, profile)
    d = horizontal_space(action, x, profile).rank
    if slice_rep.algebra_dim == 0:
        fixed_dim = d
    else:
        stacked = np.vstack([g[:d, :d] if g.shape[0] != d else g
                             for g in slice_rep.algebra])
        fixed_dim = null_space_with_tol(stacked, profile).shape[1]
    slice_reg = regular_dimension(slice_rep, profile)
    return StratumInfo(
        leaf_dim=ldim,
        cohomogeneity=action.space.manifold_dim - ldim,
        quotient_codim=d - fixed_dim - slice_reg,
    )


def make_horizontal_geodesic(action: ActionSpec, x, v,
                             interval=(0.0, 1.0),
                             profile: ToleranceProfile = DEFAULT_TOL) -> HorizontalGeodesic:
    """Horizontal geodesic through x with unit direction v.

    v must be a unit vector in the horizontal space at x (and tangent to the
    sphere in sphere mode); transnormality then keeps the geodesic
    perpendicular to every leaf it meets.
    """
    x = action.space.check_point(x)
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if nv < 1e-14:
        raise GeometryError("direction must be nonzero")
    v = v / nv
    h = horizontal_space(action, x, profile)
    if not h.contains(v, tol=1e-8):
        raise GeometryError("direction is not horizontal at the base point")
    return HorizontalGeodesic(action.space, x, v, tuple(interval))


# ---------------------------------------------------------------------------
# Preset registry
# ---------------------------------------------------------------------------

def _rot_block(n, i, j):
    a = np.zeros((n, n))
    a[i, j] = -1.0
    a[j, i] = 1.0
    return a


def _so_n(n):
    gens = [_rot_block(n, i, j) for i in range(n) for j in range(i + 1, n)]
    return ActionSpec(AmbientSpace(n, 0.0), tuple(gens), name=f"so({n})")


def _circle_weights(weights):
    m = len(weights)
    n = 2 * m
    a = np.zeros((n, n))
    for j, k in enumerate(weights):
        a[2 * j: 2 * j + 2, 2 * j: 2 * j + 2] = k * np.array([[0.0, -1.0], [1.0, 0.0]])
    name = "hopf" if tuple(weights) == (1, 1) else (
        "circle-weights(" + ",".join(str(k) for k in weights) + ")")
    return ActionSpec(AmbientSpace(n, 0.0), (a,), name=name)


def _torus_std(m):
    n = 2 * m
    gens = []
    for j in range(m):
        a = np.zeros((n, n))
        a[2 * j: 2 * j + 2, 2 * j: 2 * j + 2] = np.array([[0.0, -1.0], [1.0, 0.0]])
        gens.append(a)
    return ActionSpec(AmbientSpace(n, 0.0), tuple(gens), name=f"torus-std({m})")


def _trivial(n):
    return ActionSpec(AmbientSpace(n, 0.0), (), name=f"trivial({n})")


_PRESET_RE = {
    re.compile(r"^so\((\d+)\)$"): lambda m: _so_n(int(m.group(1))),
    re.compile(r"^trivial\((\d+)\)$"): lambda m: _trivial(int(m.group(1))),
    re.compile(r"^torus-std\((\d+)\)$"): lambda m: _torus_std(int(m.group(1))),
    re.compile(r"^circle-weights\(([\d,\s]+)\)$"): lambda m: _circle_weights(
        tuple(int(w) for w in m.group(1).split(","))),
}


def preset(name: str) -> ActionSpec:
    """Look up a preset action by name.

    Known families: so(n), trivial(n), torus-std(m), circle-weights(k1,...,km)
    and the alias hopf = circle-weights(1,1).
    """
    key = name.strip().lower().replace(" ", "")
    if key == "hopf":
        return _circle_weights((1, 1))
    for pattern, build in _PRESET_RE.items():
        m = pattern.match(key)
        if m:
            try:
                return build(m)
            except (ValueError, GeometryError) as exc:
                raise ScenarioError(f"invalid preset parameters in {name!r}: {exc}") from exc
    raise ScenarioError(f"unknown preset {name!r}")


#: (name, ambient dimension, expected polarity classification) rows used by
#: the CLI `presets` listing and by the acceptance suite.
PRESET_TABLE = (
    ("trivial(4)", 4, "polar"),
    ("so(2)", 2, "forced_polar_by_codim"),
    ("so(3)", 3, "forced_polar_by_codim"),
    ("torus-std(2)", 4, "forced_polar_by_codim"),
    ("hopf", 4, "non_polar"),
    ("circle-weights(1,2)", 4, "non_polar"),
)
