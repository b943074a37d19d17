"""Jacobi fields along horizontal geodesics and their focal indices.

Normal Jacobi fields are stored as initial-condition pairs in the parallel
frame of the normal bundle, where the Jacobi equation decouples into
f'' + k f = 0 per component and evaluation is closed-form.  The module
builds the leaf Lagrangian (Killing restrictions plus spray fields), the
vertical family of Killing restrictions, runs focal scans, and implements
the transversal (quotient) index via the symplectic-complement projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import ActionSpec, isotropy_algebra, leaf_tangent
from .errors import GeometryError
from .geometry import (
    DEFAULT_TOL,
    HorizontalGeodesic,
    ToleranceProfile,
    null_space_with_tol,
    rank_with_tol_matrix,
)
from .scan import DEFAULT_GRID, ScanResult, scan_rank_drops

#: Pairwise symplectic-form residual allowed for isotropic/Lagrangian tags.
ISOTROPY_TOL = 1e-9


def _cs(geodesic: HorizontalGeodesic, t):
    """Cosine/sine propagator coefficients of f'' + k f = 0 at t - a."""
    a = geodesic.interval[0]
    k = geodesic.space.curvature
    dt = np.asarray(t, dtype=float) - a
    if k == 0.0:
        return np.ones_like(dt), dt
    sk = np.sqrt(k)
    return np.cos(sk * dt), np.sin(sk * dt) / sk


@dataclass(frozen=True, eq=False)
class JacobiField:
    """Normal Jacobi field, stored as (value, derivative) at the left
    endpoint in the parallel frame of the normal bundle."""

    geodesic: HorizontalGeodesic
    j0: np.ndarray = field(repr=False)
    j0p: np.ndarray = field(repr=False)

    def __post_init__(self):
        nu = self.geodesic.normal_dim
        j0 = np.asarray(self.j0, dtype=float)
        j0p = np.asarray(self.j0p, dtype=float)
        if j0.shape != (nu,) or j0p.shape != (nu,):
            raise GeometryError(f"initial conditions must have shape ({nu},)")
        object.__setattr__(self, "j0", j0)
        object.__setattr__(self, "j0p", j0p)

    @classmethod
    def from_ambient(cls, geodesic: HorizontalGeodesic, value, derivative,
                     tol: float = 1e-8) -> "JacobiField":
        """Build from ambient-coordinate value/covariant derivative at the
        left endpoint; both must lie in the normal bundle."""
        e = geodesic.normal_frame()
        value = np.asarray(value, dtype=float)
        derivative = np.asarray(derivative, dtype=float)
        for v in (value, derivative):
            res = v - e @ (e.T @ v)
            if np.linalg.norm(res) > tol * max(1.0, np.linalg.norm(v)):
                raise GeometryError("initial data is not normal to the geodesic")
        return cls(geodesic, e.T @ value, e.T @ derivative)

    def value(self, t):
        c, s = _cs(self.geodesic, t)
        return np.multiply.outer(c, self.j0) + np.multiply.outer(s, self.j0p)

    def derivative(self, t):
        c, s = _cs(self.geodesic, t)
        k = self.geodesic.space.curvature
        return np.multiply.outer(-k * s, self.j0) + np.multiply.outer(c, self.j0p)

    def ambient_value(self, t):
        return self.value(t) @ self.geodesic.normal_frame().T

    @property
    def initial_conditions(self) -> np.ndarray:
        return np.concatenate([self.j0, self.j0p])


def wronskian(j1: JacobiField, j2: JacobiField) -> float:
    """Symplectic pairing <J1', J2> - <J1, J2'>, constant along the geodesic
    and therefore evaluated at the left endpoint."""
    if not j1.geodesic.same_as(j2.geodesic):
        raise GeometryError("Jacobi fields live on different geodesics")
    return float(j1.j0p @ j2.j0 - j1.j0 @ j2.j0p)


def _omega_ic(ic1: np.ndarray, ic2: np.ndarray) -> float:
    nu = ic1.shape[0] // 2
    return float(ic1[nu:] @ ic2[:nu] - ic1[:nu] @ ic2[nu:])


@dataclass(frozen=True, eq=False)
class JacobiFamily:
    """Ordered, linearly independent family of Jacobi fields on one geodesic.

    kind is one of 'lagrangian', 'isotropic', 'general'; the symplectic tags
    are verified at construction.
    """

    geodesic: HorizontalGeodesic
    fields: tuple
    kind: str = "general"

    def __post_init__(self):
        if self.kind not in ("lagrangian", "isotropic", "general"):
            raise GeometryError(f"unknown family kind {self.kind!r}")
        for f in self.fields:
            if not f.geodesic.same_as(self.geodesic):
                raise GeometryError("family members live on different geodesics")
        object.__setattr__(self, "fields", tuple(self.fields))
        ic = self.initial_matrix
        if ic.shape[1] > 0:
            s = np.linalg.svd(ic, compute_uv=False)
            if s[-1] < 1e-10 * max(s[0], 1e-30):
                raise GeometryError("family is not linearly independent")
        if self.kind in ("isotropic", "lagrangian"):
            scale = 1.0 + float(np.abs(ic).max(initial=0.0)) ** 2
            for i in range(len(self.fields)):
                for j in range(i + 1, len(self.fields)):
                    if abs(_omega_ic(ic[:, i], ic[:, j])) > ISOTROPY_TOL * scale:
                        raise GeometryError("family is not symplectically isotropic")
        if self.kind == "lagrangian" and len(self.fields) != self.geodesic.normal_dim:
            raise GeometryError("a Lagrangian family must have dimension equal "
                                "to the normal-bundle rank")

    @property
    def size(self) -> int:
        return len(self.fields)

    @property
    def initial_matrix(self) -> np.ndarray:
        """(2 nu, k) stacked initial-condition vectors."""
        nu = self.geodesic.normal_dim
        if not self.fields:
            return np.zeros((2 * nu, 0))
        return np.column_stack([f.initial_conditions for f in self.fields])

    def values(self, ts) -> np.ndarray:
        """Frame-coordinate values of all members, shape (N, nu, k)."""
        ts = np.asarray(ts, dtype=float)
        nu = self.geodesic.normal_dim
        if not self.fields:
            return np.zeros(ts.shape + (nu, 0))
        ic = self.initial_matrix
        j0, j0p = ic[:nu], ic[nu:]
        c, s = _cs(self.geodesic, ts)
        return (np.multiply.outer(c, j0) + np.multiply.outer(s, j0p))

    def derivatives(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        nu = self.geodesic.normal_dim
        if not self.fields:
            return np.zeros(ts.shape + (nu, 0))
        ic = self.initial_matrix
        j0, j0p = ic[:nu], ic[nu:]
        c, s = _cs(self.geodesic, ts)
        k = self.geodesic.space.curvature
        return (np.multiply.outer(-k * s, j0) + np.multiply.outer(c, j0p))

    @classmethod
    def from_initial_matrix(cls, geodesic, ic, kind="general") -> "JacobiFamily":
        nu = geodesic.normal_dim
        fields = tuple(JacobiField(geodesic, ic[:nu, j], ic[nu:, j])
                       for j in range(ic.shape[1]))
        return cls(geodesic, fields, kind)


@dataclass(frozen=True)
class FocalReport:
    """Focal events of a family over an interval.

    events lists (parameter, focal index) pairs counted under the
    endpoint-inclusion flags; total_index is their sum.
    """

    events: tuple
    total_index: int
    interval: tuple
    include_endpoints: tuple

    def __post_init__(self):
        if self.total_index != sum(idx for _, idx in self.events):
            raise GeometryError("total_index inconsistent with event list")


def _check_interval(geodesic, interval):
    if interval is None:
        return geodesic.interval
    a, b = float(interval[0]), float(interval[1])
    ga, gb = geodesic.interval
    pad = 1e-9 * (gb - ga)
    if a < ga - pad or b > gb + pad or not b > a:
        raise GeometryError(f"scan interval {interval} outside geodesic domain {geodesic.interval}")
    return (a, b)


def focal_scan(family: JacobiFamily, interval=None,
               include_endpoints=(True, True),
               profile: ToleranceProfile = DEFAULT_TOL,
               grid: int = DEFAULT_GRID) -> FocalReport:
    """Scan for parameters where the evaluation rank of the family drops.

    The focal index of an event is the rank deficiency of the evaluation
    matrix [J_1(t) ... J_k(t)]; endpoint events are counted only when the
    corresponding inclusion flag is set.
    """
    a, b = _check_interval(family.geodesic, interval)
    if family.size == 0:
        return FocalReport((), 0, (a, b), tuple(include_endpoints))
    result = scan_rank_drops(family.values, (a, b), family.size, profile, grid)
    return _assemble_report(result, (a, b), include_endpoints)


def _assemble_report(result: ScanResult, interval, include_endpoints) -> FocalReport:
    a, b = interval
    events = []
    if include_endpoints[0] and result.drop_at_left > 0:
        events.append((a, result.drop_at_left))
    events.extend(result.interior_events)
    if include_endpoints[1] and result.drop_at_right > 0:
        events.append((b, result.drop_at_right))
    total = sum(idx for _, idx in events)
    return FocalReport(tuple(events), total, (a, b), tuple(include_endpoints))


def index(family: JacobiFamily, interval=None, include_endpoints=(True, True),
          profile: ToleranceProfile = DEFAULT_TOL, grid: int = DEFAULT_GRID) -> int:
    """Total focal index of the family over the interval."""
    return focal_scan(family, interval, include_endpoints, profile, grid).total_index


def leaf_lagrangian(action: ActionSpec, geodesic: HorizontalGeodesic,
                    profile: ToleranceProfile = DEFAULT_TOL) -> JacobiFamily:
    """Lagrangian of variational fields through horizontal geodesics starting
    on the leaf of the left endpoint.

    Basis: restrictions of Killing fields spanning the leaf tangent at the
    start (modulo isotropy), plus spray fields J(a) = 0, J'(a) spanning the
    directions normal to both the leaf and the geodesic.
    """
    a = geodesic.interval[0]
    p = geodesic.point(a)
    v = geodesic.velocity(a)
    e = geodesic.normal_frame()
    nu = geodesic.normal_dim
    fields = []

    if action.algebra_dim > 0:
        kv = action.killing_values(p)  # (n, m)
        u, s, vt = np.linalg.svd(kv, full_matrices=False)
        rank = 0 if s.size == 0 or s[0] < profile.zero_abs_tol else int(
            np.sum(s >= profile.rank_rel_tol * s[0]))
        stack = np.stack(action.algebra, axis=0)
        for j in range(rank):
            mat = np.einsum("g,gij->ij", vt[j], stack)
            fields.append(JacobiField(geodesic, e.T @ (mat @ p), e.T @ (mat @ v)))
    leaf_rank = len(fields)

    # Spray directions: frame coordinates orthogonal to the leaf tangent.
    if leaf_rank > 0:
        leaf_in_frame = np.column_stack([f.j0 for f in fields])
        eta = null_space_with_tol(leaf_in_frame.T, profile)  # (nu, nu - l)
    else:
        eta = np.eye(nu)
    for j in range(eta.shape[1]):
        fields.append(JacobiField(geodesic, np.zeros(nu), eta[:, j]))

    if len(fields) != nu:
        raise GeometryError(
            f"leaf Lagrangian has dimension {len(fields)}, expected {nu}; "
            "is the geodesic horizontal for this action?")
    return JacobiFamily(geodesic, tuple(fields), "lagrangian")


def vertical_family(action: ActionSpec, geodesic: HorizontalGeodesic,
                    profile: ToleranceProfile = DEFAULT_TOL) -> JacobiFamily:
    """Span of all Killing-field restrictions along the geodesic, as an
    isotropic family of Jacobi fields; its dimension is the maximal leaf
    dimension met by the geodesic."""
    a = geodesic.interval[0]
    p = geodesic.point(a)
    v = geodesic.velocity(a)
    e = geodesic.normal_frame()
    if action.algebra_dim == 0:
        return JacobiFamily(geodesic, (), "isotropic")
    ics = []
    for mat in action.algebra:
        ics.append(np.concatenate([e.T @ (mat @ p), e.T @ (mat @ v)]))
    rank, sub = rank_with_tol_matrix(np.column_stack(ics), profile)
    return JacobiFamily.from_initial_matrix(geodesic, sub.basis[:, :rank], "isotropic")


def symplectic_complement(family: JacobiFamily,
                          profile: ToleranceProfile = DEFAULT_TOL) -> JacobiFamily:
    """Orthogonal complement of the family with respect to the symplectic
    form, inside the full 2 nu - dimensional space of normal Jacobi fields."""
    nu = family.geodesic.normal_dim
    if family.size == 0:
        return JacobiFamily.from_initial_matrix(family.geodesic, np.eye(2 * nu))
    ic = family.initial_matrix
    # omega(J_i, e_j) rows: [j0p_i | -j0_i] against the unit IC vectors.
    pairing = np.hstack([ic[nu:].T, -ic[:nu].T])  # (k, 2 nu)
    basis = null_space_with_tol(pairing, profile)  # (2 nu, 2 nu - k)
    return JacobiFamily.from_initial_matrix(family.geodesic, basis)


def _membership_residual(sub_ic, big_ic):
    """Max relative residual of sub columns after projection onto span(big)."""
    q, _ = np.linalg.qr(big_ic)
    res = sub_ic - q @ (q.T @ sub_ic)
    norms = np.linalg.norm(sub_ic, axis=0)
    return float(np.max(np.linalg.norm(res, axis=0) / np.maximum(norms, 1e-30),
                        initial=0.0))


def quotient_focal_index(w: JacobiFamily, lam: JacobiFamily, interval=None,
                           include_endpoints=(True, True),
                           profile: ToleranceProfile = DEFAULT_TOL,
                           grid: int = DEFAULT_GRID) -> int:
    """Focal index of the transversal (quotient) Jacobi system Lambda / W.

    W must be an isotropic subfamily of the Lagrangian Lambda.  A W-basis is
    completed to a Lambda-basis; at each parameter the complement fields are
    projected off the smooth extension of the evaluation space of W (the
    evaluation image, augmented by derivatives of members vanishing there),
    and rank drops of the projections are counted like a focal scan.  The
    result is computed independently of index(W) and index(Lambda).
    """
    if not w.geodesic.same_as(lam.geodesic):
        raise GeometryError("families live on different geodesics")
    if lam.kind != "lagrangian":
        raise GeometryError("second family must be Lagrangian")
    a, b = _check_interval(lam.geodesic, interval)
    kw = w.size
    m = lam.size - kw
    if _membership_residual(w.initial_matrix, lam.initial_matrix) > 1e-8:
        raise GeometryError("W is not contained in Lambda")
    if m == 0:
        return 0
    if kw == 0:
        return index(lam, (a, b), include_endpoints, profile, grid)

    # Complement of W inside Lambda, orthogonal in initial-condition space.
    w_ic = w.initial_matrix
    qw, _ = np.linalg.qr(w_ic)
    lam_ic = lam.initial_matrix
    res = lam_ic - qw @ (qw.T @ lam_ic)
    rank, sub = rank_with_tol_matrix(res, profile)
    if rank != m:
        raise GeometryError("could not complete W to a Lambda basis")
    comp = JacobiFamily.from_initial_matrix(lam.geodesic, sub.basis[:, :m])

    # Global scale of the W evaluation, for the near-focal detection cutoff.
    ts_probe = np.linspace(a, b, min(grid, 512))
    w_scale = float(np.linalg.svd(w.values(ts_probe), compute_uv=False)[..., 0].max())
    if w_scale <= 0.0:
        raise GeometryError("vertical family evaluates to zero along the geodesic")
    near_focal_cut = 1e-7 * w_scale

    def projected_values(ts):
        ts = np.asarray(ts, dtype=float)
        vals_w = w.values(ts)             # (N, nu, kw)
        vals_c = comp.values(ts)          # (N, nu, m)
        u, s, vt = np.linalg.svd(vals_w, full_matrices=False)
        out = np.empty_like(vals_c)
        for i in range(ts.shape[0]):
            if s[i, -1] > near_focal_cut:
                basis = u[i, :, :kw]
            else:
                basis = _extended_basis(w, ts[i], vals_w[i], near_focal_cut, profile)
            out[i] = vals_c[i] - basis @ (basis.T @ vals_c[i])
        return out

    result = scan_rank_drops(projected_values, (a, b), m, profile, grid)
    report = _assemble_report(result, (a, b), include_endpoints)
    return report.total_index


def _extended_basis(w: JacobiFamily, t, vals, cutoff, profile):
    """Orthonormal basis of the smooth extension of W(t): the evaluation
    image plus derivatives of combinations vanishing at t.  Its dimension is
    constant and equal to dim W."""
    kw = w.size
    u, s, vt = np.linalg.svd(vals, full_matrices=False)
    n_val = int(np.sum(s > cutoff))
    kernel = vt[n_val:].T  # (kw, kw - n_val) coefficient combos with J(t) ~ 0
    ders = w.derivatives(np.array([t]))[0] @ kernel
    stacked = np.column_stack([vals, ders])
    rank, sub = rank_with_tol_matrix(stacked, profile)
    if rank != kw:
        raise GeometryError(
            f"W-extension dimension {rank} != dim W = {kw} at t = {t:.6g}; "
            "tolerance profile is likely misconfigured")
    return sub.basis[:, :kw]
