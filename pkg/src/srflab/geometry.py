"""Constant-curvature ambient spaces and tolerance-aware linear algebra.

Everything here is closed-form: geodesics are straight lines in Euclidean
space or great circles on round spheres, parallel transport along them is an
explicit rotation, and the curvature endomorphism is multiplication by the
(constant) curvature.  All rank decisions go through a single SVD-based
cutoff so that downstream leaf-dimension and focal-index computations share
one tolerance policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical knobs shared by every tolerance-sensitive operation.

    rank_rel_tol      relative singular-value cutoff for rank decisions
    zero_abs_tol      absolute near-zero cutoff
    fd_step           finite-difference step, as a fraction of local scale
    bisect_resolution parameter resolution for event refinement, as a
                      fraction of the interval length
    """

    rank_rel_tol: float = 1e-8
    zero_abs_tol: float = 1e-12
    fd_step: float = 1e-5
    bisect_resolution: float = 1e-10

    def __post_init__(self):
        for name in ("rank_rel_tol", "zero_abs_tol", "fd_step", "bisect_resolution"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.rank_rel_tol >= 1.0:
            raise ValueError("rank_rel_tol must be < 1")


DEFAULT_TOL = ToleranceProfile()


@dataclass(frozen=True)
class AmbientSpace:
    """Euclidean space R^n (curvature 0) or a round sphere of curvature k > 0.

    The sphere is handled through its embedding in R^n, so points are
    n-vectors of norm 1/sqrt(k) and the manifold dimension is n - 1.
    """

    dimension: int
    curvature: float = 0.0

    def __post_init__(self):
        if self.dimension < 2:
            raise GeometryError("ambient dimension must be >= 2")
        if self.curvature < 0.0:
            raise GeometryError("curvature must be non-negative")

    @property
    def is_sphere(self) -> bool:
        return self.curvature > 0.0

    @property
    def manifold_dim(self) -> int:
        return self.dimension - 1 if self.is_sphere else self.dimension

    @property
    def radius(self) -> float:
        if not self.is_sphere:
            raise GeometryError("radius is only defined in sphere mode")
        return 1.0 / np.sqrt(self.curvature)

    def check_point(self, x, tol: float = 1e-10):
        """Validate that x lies in the space; returns x (renormalized on the
        sphere to control drift)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise GeometryError(
                f"point has shape {x.shape}, expected ({self.dimension},)"
            )
        if self.is_sphere:
            r2 = float(x @ x) * self.curvature
            if abs(r2 - 1.0) > tol * max(1.0, r2):
                raise GeometryError(f"point is off the sphere: |x|^2*k = {r2}")
            x = x / (np.linalg.norm(x) * np.sqrt(self.curvature))
        return x

    def check_tangent(self, x, v, tol: float = 1e-8):
        """Validate that v is tangent to the space at x."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dimension,):
            raise GeometryError(
                f"vector has shape {v.shape}, expected ({self.dimension},)"
            )
        if self.is_sphere:
            proj = abs(float(x @ v)) * np.sqrt(self.curvature)
            if proj > tol * max(1.0, float(np.linalg.norm(v))):
                raise GeometryError("vector is not tangent to the sphere")
        return v


@dataclass(frozen=True)
class Subspace:
    """Linear subspace of R^n stored through an orthonormal basis.

    basis is an (n, r) array whose columns are the basis vectors; r = 0 is
    the trivial subspace.
    """

    ambient_dimension: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != self.ambient_dimension:
            raise GeometryError("basis must be (ambient_dimension, rank)")
        if b.shape[1] > 0:
            gram = b.T @ b
            if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-9):
                raise GeometryError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def trivial(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n))

    def contains(self, v, tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=float)
        res = v - self.basis @ (self.basis.T @ v)
        return float(np.linalg.norm(res)) <= tol * max(1.0, float(np.linalg.norm(v)))


def rank_with_tol(vectors, profile: ToleranceProfile = DEFAULT_TOL):
    """Numerical rank and orthonormal basis of the span of a vector list.

    Rank counts singular values >= rank_rel_tol * sigma_max; if every input
    is below zero_abs_tol in norm the rank is 0.  Returns (rank, Subspace).
    """
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if not vecs:
        raise GeometryError("cannot infer ambient dimension from an empty list; "
                            "use Subspace.trivial")
    n = vecs[0].shape[0]
    for v in vecs:
        if v.shape != (n,):
            raise GeometryError("input vectors have mismatched dimensions")
    mat = np.column_stack(vecs)
    return rank_with_tol_matrix(mat, profile)


def rank_with_tol_matrix(mat, profile: ToleranceProfile = DEFAULT_TOL):
    """rank_with_tol for an (n, m) matrix of column vectors (m may be 0)."""
    mat = np.asarray(mat, dtype=float)
    n = mat.shape[0]
    if mat.shape[1] == 0:
        return 0, Subspace.trivial(n)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s[0] < profile.zero_abs_tol:
        return 0, Subspace.trivial(n)
    rank = int(np.sum(s >= profile.rank_rel_tol * s[0]))
    return rank, Subspace(n, u[:, :rank])


def null_space_with_tol(mat, profile: ToleranceProfile = DEFAULT_TOL):
    """Orthonormal basis (columns) of the numerical null space of mat."""
    mat = np.asarray(mat, dtype=float)
    m = mat.shape[1]
    if m == 0:
        return np.zeros((0, 0))
    u, s, vt = np.linalg.svd(mat, full_matrices=True)
    if s.size == 0 or s[0] < profile.zero_abs_tol:
        return np.eye(m)
    rank = int(np.sum(s >= profile.rank_rel_tol * s[0]))
    return vt[rank:].T


def project_onto(sub: Subspace, v):
    """Orthogonal projection of v onto the subspace."""
    v = np.asarray(v, dtype=float)
    if v.shape != (sub.ambient_dimension,):
        raise GeometryError("vector dimension does not match subspace")
    return sub.basis @ (sub.basis.T @ v)


def orthogonal_complement(sub: Subspace, within: Subspace | None = None) -> Subspace:
    """Orthogonal complement of sub, inside `within` (default: all of R^n)."""
    n = sub.ambient_dimension
    if within is None:
        within = Subspace.full(n)
    if within.ambient_dimension != n:
        raise GeometryError("subspaces live in different ambient dimensions")
    # Complement = null space of the map w -> sub.basis^T (within.basis w).
    if within.rank == 0:
        return Subspace.trivial(n)
    if sub.rank == 0:
        return within
    coeff = null_space_with_tol(sub.basis.T @ within.basis)
    basis = within.basis @ coeff
    # Re-orthonormalize to guard against round-off in the product.
    if basis.shape[1] > 0:
        basis, _ = np.linalg.qr(basis)
    return Subspace(n, basis)


def curvature_endomorphism(space: AmbientSpace, geodesic_direction, u,
                           position=None, tol: float = 1e-8):
    """Apply the curvature endomorphism of the space to a normal vector u.

    u must be orthogonal to the geodesic direction (and to the position
    vector in sphere mode, where `position` is required).  For constant
    curvature k the result is simply k * u.
    """
    d = np.asarray(geodesic_direction, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.shape != d.shape:
        raise GeometryError("dimension mismatch between u and direction")
    scale = max(1.0, float(np.linalg.norm(u)))
    if abs(float(u @ d)) > tol * scale * max(1.0, float(np.linalg.norm(d))):
        raise GeometryError("u is not normal to the geodesic direction")
    if space.is_sphere:
        if position is None:
            raise GeometryError("sphere mode requires the position vector")
        p = np.asarray(position, dtype=float)
        if abs(float(u @ p)) * np.sqrt(space.curvature) > tol * scale:
            raise GeometryError("u is not tangent to the sphere")
    return space.curvature * u


@dataclass(frozen=True, eq=False)
class HorizontalGeodesic:
    """Unit-speed geodesic gamma(t) in a constant-curvature space.

    Euclidean:  gamma(t) = x + t v
    sphere:     gamma(t) = cos(sqrt(k) t) x + sin(sqrt(k) t) v / sqrt(k)

    The parameter interval [a, b] is carried along; evaluation outside it is
    allowed (dense output), interval membership is checked by the operations
    that require it.
    """

    space: AmbientSpace
    base: np.ndarray = field(repr=False)
    direction: np.ndarray = field(repr=False)
    interval: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        x = self.space.check_point(self.base)
        v = np.asarray(self.direction, dtype=float)
        nv = float(np.linalg.norm(v))
        if nv < 1e-14:
            raise GeometryError("geodesic direction must be nonzero")
        if abs(nv - 1.0) > 1e-8:
            raise GeometryError("geodesic direction must be a unit vector")
        v = v / nv
        self.space.check_tangent(x, v)
        if self.space.is_sphere:
            # Remove any radial drift exactly.
            v = v - (x @ v) * x * self.space.curvature
            v = v / np.linalg.norm(v)
        a, b = float(self.interval[0]), float(self.interval[1])
        if not b > a:
            raise GeometryError("interval must satisfy a < b")
        object.__setattr__(self, "base", x)
        object.__setattr__(self, "direction", v)
        object.__setattr__(self, "interval", (a, b))

    def same_as(self, other: "HorizontalGeodesic", tol: float = 1e-10) -> bool:
        return (self.space == other.space
                and np.allclose(self.base, other.base, atol=tol)
                and np.allclose(self.direction, other.direction, atol=tol)
                and np.allclose(self.interval, other.interval, atol=tol))

    def point(self, t):
        """gamma(t); t may be a scalar or an array (returns (..., n))."""
        t = np.asarray(t, dtype=float)
        k = self.space.curvature
        if k == 0.0:
            return self.base + np.multiply.outer(t, self.direction)
        sk = np.sqrt(k)
        return (np.multiply.outer(np.cos(sk * t), self.base)
                + np.multiply.outer(np.sin(sk * t) / sk, self.direction))

    def velocity(self, t):
        """gamma'(t); same broadcasting as point()."""
        t = np.asarray(t, dtype=float)
        k = self.space.curvature
        if k == 0.0:
            return np.broadcast_to(self.direction, t.shape + self.direction.shape).copy()
        sk = np.sqrt(k)
        return (np.multiply.outer(-sk * np.sin(sk * t), self.base)
                + np.multiply.outer(np.cos(sk * t), self.direction))

    def contains_param(self, t, slack: float = 1e-9) -> bool:
        a, b = self.interval
        pad = slack * (b - a)
        return a - pad <= t <= b + pad

    def normal_frame(self) -> np.ndarray:
        """Orthonormal frame of the normal bundle, as an (n, nu) matrix.

        In both modes the normal bundle is a fixed linear subspace of the
        embedding space (orthogonal to the direction, and additionally to the
        base point on the sphere), so the parallel frame is constant in
        ambient coordinates.  nu = manifold_dim - 1.
        """
        rows = [self.direction]
        if self.space.is_sphere:
            rows.append(self.base * np.sqrt(self.space.curvature))
        mat = np.array(rows)
        _, _, vt = np.linalg.svd(mat, full_matrices=True)
        return vt[len(rows):].T

    @property
    def normal_dim(self) -> int:
        return self.space.manifold_dim - 1


def parallel_frame(geodesic: HorizontalGeodesic, t: float) -> np.ndarray:
    """Parallel-transported orthonormal frame of the normal bundle at gamma(t).

    The frame is obtained by transporting the left-endpoint frame; for
    straight lines and great circles it is constant in ambient coordinates.
    """
    if not geodesic.contains_param(t):
        raise GeometryError(f"t = {t} outside geodesic interval {geodesic.interval}")
    return geodesic.normal_frame()


def parallel_transport(geodesic: HorizontalGeodesic, t0: float, t1: float, u):
    """Parallel transport of a tangent vector u from gamma(t0) to gamma(t1).

    The component along gamma'(t0) rotates with the geodesic; components in
    the normal bundle are constant.  Euclidean transport is the identity.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (geodesic.space.dimension,):
        raise GeometryError("vector dimension does not match the space")
    if geodesic.space.curvature == 0.0:
        return u.copy()
    p0 = geodesic.point(t0)
    geodesic.space.check_tangent(p0, u)
    v0 = geodesic.velocity(t0)
    along = float(u @ v0)
    normal = u - along * v0
    # Project residual radial drift away (u tangent => negligible).
    k = geodesic.space.curvature
    normal = normal - (normal @ p0) * p0 * k
    return along * geodesic.velocity(t1) + normal
