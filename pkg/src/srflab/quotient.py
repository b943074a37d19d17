"""Quotient-level diagnostics for linear isometric actions.

Curvature of the local quotient through the submersion curvature relation
K_B(X, Y) = K_M + 3 |A_XY|^2, with the integrability tensor A obtained from
finite-difference brackets of horizontally projected frame fields; curvature
explosion probes toward singular points; polarity tests; crossing numbers of
horizontal geodesics and their continuity under deformations; and the
conjugate-point dichotomy built on the Jacobi engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .actions import (
    ActionSpec,
    foliation_codim,
    horizontal_space,
    is_regular_point,
    leaf_dimension,
    leaf_tangent,
    regular_dimension,
    slice_representation,
    make_horizontal_geodesic,
)
from .errors import CoherenceError, GeometryError
from .geometry import (
    DEFAULT_TOL,
    HorizontalGeodesic,
    ToleranceProfile,
    project_onto,
)
from .jacobi import index, leaf_lagrangian, vertical_family
from .scan import DEFAULT_GRID, scan_rank_drops

#: Extrapolated kappa_bar * r^2 at or below this value counts as "-> 0".
EXPLOSION_LIMIT_TOL = 1e-3

#: Scale-normalized vertical bracket norm above this value certifies
#: non-polarity; calibrated three orders above finite-difference noise.
POLARITY_BRACKET_TOL = 1e-4


# ---------------------------------------------------------------------------
# O'Neill curvature via finite-difference brackets
# ---------------------------------------------------------------------------

def _horizontal_projector(action: ActionSpec, z, profile: ToleranceProfile):
    """Closed-form projector onto the horizontal space at z."""
    h = horizontal_space(action, z, profile)
    return h.basis @ h.basis.T


def vertical_bracket(action: ActionSpec, x, xdir, ydir,
                     profile: ToleranceProfile = DEFAULT_TOL):
    """Vertical part of the bracket of the horizontal extensions of two
    horizontal vectors at x.

    The extensions are Xbar(z) = P_H(z) X with the closed-form horizontal
    projector; derivatives are central finite differences with one level of
    Richardson extrapolation.  Raises if a probe point changes stratum,
    which signals proximity to a singular stratum below fd_step.
    """
    x = action.space.check_point(x)
    xdir = np.asarray(xdir, dtype=float)
    ydir = np.asarray(ydir, dtype=float)
    base_dim = leaf_dimension(action, x, profile)
    h = profile.fd_step * max(float(np.linalg.norm(x)), 1e-3)

    def extension_derivative(direction, vec):
        # d/ds P_H(x + s * direction) vec at s = 0, Richardson over h, h/2.
        def central(step):
            for sgn in (1.0, -1.0):
                z = x + sgn * step * direction
                if action.space.is_sphere:
                    z = z / (np.linalg.norm(z) * np.sqrt(action.space.curvature))
                if leaf_dimension(action, z, profile) != base_dim:
                    raise GeometryError(
                        "finite-difference probe crossed a stratum; "
                        "the point is closer to a singular stratum than fd_step")
            def ext(step_signed):
                z = x + step_signed * direction
                if action.space.is_sphere:
                    z = z / (np.linalg.norm(z) * np.sqrt(action.space.curvature))
                return _horizontal_projector(action, z, profile) @ vec
            return (ext(step) - ext(-step)) / (2.0 * step)
        d1 = central(h)
        d2 = central(h / 2.0)
        return (4.0 * d2 - d1) / 3.0

    bracket = extension_derivative(xdir, ydir) - extension_derivative(ydir, xdir)
    return project_onto(leaf_tangent(action, x, profile), bracket)


def oneill_curvature(action: ActionSpec, x, xdir, ydir,
                     profile: ToleranceProfile = DEFAULT_TOL) -> float:
    """Sectional curvature of the local quotient at a regular point, for the
    plane spanned by two orthonormal horizontal vectors."""
    x = action.space.check_point(x)
    if not is_regular_point(action, x, profile):
        raise GeometryError("O'Neill curvature requires a regular point")
    if foliation_codim(action, profile) < 2:
        raise GeometryError("quotient cohomogeneity must be >= 2")
    xdir = np.asarray(xdir, dtype=float)
    ydir = np.asarray(ydir, dtype=float)
    hsp = horizontal_space(action, x, profile)
    for v in (xdir, ydir):
        if abs(np.linalg.norm(v) - 1.0) > 1e-8 or not hsp.contains(v):
            raise GeometryError("plane vectors must be unit horizontal vectors")
    if abs(float(xdir @ ydir)) > 1e-8:
        raise GeometryError("plane vectors must be orthogonal")
    a_tensor = 0.5 * vertical_bracket(action, x, xdir, ydir, profile)
    return float(action.space.curvature + 3.0 * (a_tensor @ a_tensor))


def max_quotient_curvature(action: ActionSpec, x,
                           profile: ToleranceProfile = DEFAULT_TOL,
                           n_samples: int = 256, seed: int = 0) -> float:
    """Maximum quotient sectional curvature at a regular point, by seeded
    sampling of horizontal planes followed by local ascent on the best
    candidates.  Reported as a lower bound of the true maximum."""
    x = action.space.check_point(x)
    if not is_regular_point(action, x, profile):
        raise GeometryError("max quotient curvature requires a regular point")
    hsp = horizontal_space(action, x, profile)
    q = hsp.rank
    if q < 2:
        raise GeometryError("quotient cohomogeneity must be >= 2")
    basis = hsp.basis
    n = action.space.dimension

    # The integrability obstruction is tensorial in the plane vectors, so the
    # expensive finite-difference brackets are computed once on the frame and
    # the plane search reduces to cheap bilinear algebra.
    tensor = np.zeros((q, q, n))
    for i in range(q):
        for j in range(i + 1, q):
            t_ij = vertical_bracket(action, x, basis[:, i], basis[:, j], profile)
            tensor[i, j] = t_ij
            tensor[j, i] = -t_ij
    kappa = action.space.curvature

    def evaluate(coeff_a, coeff_b):
        na = np.linalg.norm(coeff_a)
        if na < 1e-12:
            return -np.inf
        a = coeff_a / na
        b = coeff_b - (coeff_b @ a) * a
        nb = np.linalg.norm(b)
        if nb < 1e-12:
            return -np.inf
        b = b / nb
        vb = np.einsum("i,j,ijn->n", a, b, tensor)
        return kappa + 0.75 * float(vb @ vb)  # A = vb / 2, contribution 3 |A|^2

    if q == 2:
        return evaluate(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n_samples):
        ca, cb = rng.standard_normal(q), rng.standard_normal(q)
        samples.append((evaluate(ca, cb), ca, cb))
    samples.sort(key=lambda row: -row[0])

    best = samples[0][0]
    for val, ca, cb in samples[:8]:
        cur_val, cur_a, cur_b = val, ca.copy(), cb.copy()
        for step in range(60):
            sigma = 0.3 * (0.005 / 0.3) ** (step / 59.0)
            pa = cur_a + sigma * rng.standard_normal(q)
            pb = cur_b + sigma * rng.standard_normal(q)
            new_val = evaluate(pa, pb)
            if new_val > cur_val:
                cur_val, cur_a, cur_b = new_val, pa, pb
        best = max(best, cur_val)
    return float(best)


# ---------------------------------------------------------------------------
# Explosion probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplosionProbe:
    """kappa_bar versus distance to a singular point along a probe ray."""

    rows: tuple  # ((r, kappa_bar, kappa_bar * r^2), ...) decreasing in r
    fitted_limit: float
    verdict: str  # 'bounded' or 'quadratic_explosion'


def explosion_probe(action: ActionSpec, x_sing, direction, radii,
                    profile: ToleranceProfile = DEFAULT_TOL,
                    n_samples: int = 256, seed: int = 0) -> ExplosionProbe:
    """Tabulate kappa_bar and kappa_bar * r^2 at probe points approaching a
    singular point, and extrapolate the product to r -> 0."""
    radii = [float(r) for r in radii]
    if len(radii) < 3 or any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise GeometryError("radii must be a strictly decreasing list of length >= 3")
    if foliation_codim(action, profile) < 2:
        raise GeometryError("explosion probe needs quotient cohomogeneity >= 2")
    x_sing = action.space.check_point(x_sing)
    if is_regular_point(action, x_sing, profile):
        raise GeometryError("probe center must lie on a singular stratum")
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)

    rows = []
    for r in radii:
        if action.space.is_sphere:
            geo = HorizontalGeodesic(action.space, x_sing, v, (0.0, max(radii)))
            z = geo.point(r)
        else:
            z = x_sing + r * v
        if not is_regular_point(action, z, profile):
            raise GeometryError(f"probe point at r = {r} lies on a singular stratum")
        kbar = max_quotient_curvature(action, z, profile, n_samples, seed)
        rows.append((r, kbar, kbar * r * r))

    last = rows[-3:]
    rs = np.array([row[0] for row in last])
    ps = np.array([row[2] for row in last])
    fitted = float(np.polyfit(rs, ps, 1)[1])
    verdict = "bounded" if fitted <= EXPLOSION_LIMIT_TOL else "quadratic_explosion"
    return ExplosionProbe(tuple(rows), fitted, verdict)


# ---------------------------------------------------------------------------
# Polarity tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarityVerdict:
    verdict: str  # 'polar' | 'non_polar' | 'forced_polar_by_codim'
    max_obstruction: float
    witness: tuple | None = None  # (point, (X, Y), scale-normalized norm)

    @property
    def is_polar(self) -> bool:
        return self.verdict != "non_polar"


def polarity_test(action: ActionSpec, profile: ToleranceProfile = DEFAULT_TOL,
                  n_points: int = 64, seed: int = 0,
                  use_fast_path: bool = True) -> PolarityVerdict:
    """Decide polarity of a Euclidean-mode linear action.

    Quotients of cohomogeneity <= 2 are polar outright (scaling-invariant
    foliations of codimension <= 2 admit sections).  Otherwise the horizontal
    distribution is tested for integrability: vertical parts of brackets of
    horizontally projected frame fields are sampled at seeded regular points,
    and any bracket norm above the decision threshold certifies non-polarity.
    """
    if action.space.is_sphere:
        raise GeometryError("polarity is tested on Euclidean-mode actions; "
                            "restrict/extend through the cone construction")
    if n_points <= 0:
        raise GeometryError("n_points must be positive")
    codim = foliation_codim(action, profile)
    if use_fast_path and codim <= 2:
        return PolarityVerdict("forced_polar_by_codim", 0.0)

    rng = np.random.default_rng(seed)
    reg_dim = regular_dimension(action, profile)
    best = (0.0, None)
    found_regular = False
    attempts = 0
    tested = 0
    while tested < n_points and attempts < 20 * n_points:
        attempts += 1
        x = rng.standard_normal(action.space.dimension)
        if leaf_dimension(action, x, profile) != reg_dim:
            continue
        found_regular = True
        tested += 1
        basis = horizontal_space(action, x, profile).basis
        scale = float(np.linalg.norm(x))
        for i in range(basis.shape[1]):
            for j in range(i + 1, basis.shape[1]):
                vb = vertical_bracket(action, x, basis[:, i], basis[:, j], profile)
                obstruction = float(np.linalg.norm(vb)) * scale
                if obstruction > best[0]:
                    best = (obstruction, (x.copy(), (basis[:, i].copy(), basis[:, j].copy()),
                                          obstruction))
        if best[0] > POLARITY_BRACKET_TOL:
            return PolarityVerdict("non_polar", best[0], best[1])
    if not found_regular:
        raise GeometryError("no regular sample point found; degenerate generator list")
    return PolarityVerdict("polar", best[0])


def infinitesimal_polarity(action: ActionSpec, x,
                           profile: ToleranceProfile = DEFAULT_TOL,
                           n_points: int = 64, seed: int = 0,
                           use_fast_path: bool = True) -> PolarityVerdict:
    """Polarity of the slice representation at x."""
    return polarity_test(slice_representation(action, x, profile),
                         profile, n_points, seed, use_fast_path)


# ---------------------------------------------------------------------------
# Crossing numbers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossingRecord:
    geodesic: HorizontalGeodesic
    events: tuple  # ((t_i, c_i), ...)
    total: int


def crossing_number(action: ActionSpec, geodesic: HorizontalGeodesic,
                    profile: ToleranceProfile = DEFAULT_TOL,
                    grid: int = DEFAULT_GRID) -> CrossingRecord:
    """Sum of leaf-dimension drops where a regular horizontal geodesic meets
    singular strata; cross-checked against the vertical focal index."""
    a, b = geodesic.interval
    reg = regular_dimension(action, profile)
    for t, label in ((a, "left"), (b, "right")):
        if leaf_dimension(action, geodesic.point(t), profile) != reg:
            raise GeometryError(f"{label} endpoint of the geodesic is not regular")

    def killing_matrix(ts):
        return action.killing_values(geodesic.point(ts))

    result = scan_rank_drops(killing_matrix, (a, b), reg, profile, grid)
    events = result.interior_events
    total = sum(c for _, c in events)

    w = vertical_family(action, geodesic, profile)
    vert_index = index(w, (a, b), include_endpoints=(False, False),
                       profile=profile, grid=grid)
    if vert_index != total:
        raise CoherenceError(
            f"crossing number {total} != vertical focal index {vert_index}")
    return CrossingRecord(geodesic, events, total)


# ---------------------------------------------------------------------------
# Conjugate points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjugateReport:
    has_conjugate: bool
    ind_lambda: int  # open-interval index of the leaf Lagrangian
    ind_w: int       # open-interval vertical index
    regular_start_identity: bool | None = None


def horizontal_conjugate_test(action: ActionSpec, geodesic: HorizontalGeodesic,
                              profile: ToleranceProfile = DEFAULT_TOL,
                              grid: int = DEFAULT_GRID) -> ConjugateReport:
    """Detect horizontal conjugate points: they exist if and only if the
    open-interval indices of the leaf Lagrangian and of the vertical family
    differ.  For regular starting points the closed-interval identity
    ind_Lambda = ind_W + codim - 1 is reported as an extra check."""
    lam = leaf_lagrangian(action, geodesic, profile)
    w = vertical_family(action, geodesic, profile)
    open_flags = (False, False)
    ind_lam = index(lam, None, open_flags, profile, grid)
    ind_w = index(w, None, open_flags, profile, grid)
    identity = None
    if is_regular_point(action, geodesic.point(geodesic.interval[0]), profile):
        closed = (True, True)
        lam_c = index(lam, None, closed, profile, grid)
        w_c = index(w, None, closed, profile, grid)
        identity = lam_c == w_c + foliation_codim(action, profile) - 1
    return ConjugateReport(ind_lam != ind_w, ind_lam, ind_w, identity)


def random_horizontal_geodesic(action: ActionSpec, rng,
                               length: float = 2.0,
                               profile: ToleranceProfile = DEFAULT_TOL,
                               require_regular_endpoints: bool = True,
                               max_tries: int = 200) -> HorizontalGeodesic:
    """Seeded random horizontal geodesic with (by default) regular endpoints."""
    reg = regular_dimension(action, profile)
    for _ in range(max_tries):
        x = rng.standard_normal(action.space.dimension)
        if action.space.is_sphere:
            x = x / (np.linalg.norm(x) * np.sqrt(action.space.curvature))
        if leaf_dimension(action, x, profile) != reg:
            continue
        hsp = horizontal_space(action, x, profile)
        if hsp.rank == 0:
            continue
        v = hsp.basis @ rng.standard_normal(hsp.rank)
        nrm = np.linalg.norm(v)
        if nrm < 1e-10:
            continue
        geo = HorizontalGeodesic(action.space, x, v / nrm, (0.0, length))
        if require_regular_endpoints and leaf_dimension(
                action, geo.point(length), profile) != reg:
            continue
        return geo
    raise GeometryError("could not sample a horizontal geodesic with regular endpoints")


def conjugate_witness_search(action: ActionSpec, n_trials: int = 64,
                             seed: int = 0, length: float = 2.0,
                             profile: ToleranceProfile = DEFAULT_TOL,
                             grid: int = DEFAULT_GRID):
    """Search seeded random horizontal geodesics for one with a horizontal
    conjugate point; returns (geodesic, report) or None."""
    rng = np.random.default_rng(seed)
    for _ in range(n_trials):
        geo = random_horizontal_geodesic(action, rng, length, profile)
        report = horizontal_conjugate_test(action, geo, profile, grid)
        if report.has_conjugate:
            return geo, report
    return None


# ---------------------------------------------------------------------------
# Crossing continuity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuityReport:
    rows: tuple          # ((s, crossing number), ...)
    jumps: tuple         # ((s_before, s_after, c_before, c_after), ...)
    verdict: str         # 'continuous' or 'discontinuity found'


def crossing_continuity_probe(action: ActionSpec, start, end, n_steps: int = 16,
                              interval=(0.0, 2.0),
                              profile: ToleranceProfile = DEFAULT_TOL,
                              grid: int = DEFAULT_GRID,
                              polarity_seed: int = 0) -> ContinuityReport:
    """Crossing numbers along a continuous family of regular horizontal
    geodesics interpolating (base, direction) pairs, with jump detection.

    Any detected jump must be explainable by a non-polar slice somewhere on
    the jumping geodesics; absence of such a witness raises CoherenceError.
    """
    x0, v0 = (np.asarray(a, dtype=float) for a in start)
    x1, v1 = (np.asarray(a, dtype=float) for a in end)
    svals = np.linspace(0.0, 1.0, n_steps)
    rows = []
    records = []
    for s in svals:
        x = (1.0 - s) * x0 + s * x1
        if action.space.is_sphere:
            x = x / (np.linalg.norm(x) * np.sqrt(action.space.curvature))
        v = (1.0 - s) * v0 + s * v1
        hsp = horizontal_space(action, x, profile)
        v = hsp.basis @ (hsp.basis.T @ v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-8:
            raise GeometryError(f"family degenerates at s = {s}: no horizontal direction")
        try:
            geo = make_horizontal_geodesic(action, x, v / nrm, interval, profile)
            rec = crossing_number(action, geo, profile, grid)
        except GeometryError as exc:
            raise GeometryError(
                f"family leaves the regular-endpoint regime at s = {s}: {exc}") from exc
        rows.append((float(s), rec.total))
        records.append(rec)

    jumps = []
    for i in range(len(rows) - 1):
        if rows[i][1] != rows[i + 1][1]:
            jumps.append((rows[i][0], rows[i + 1][0], rows[i][1], rows[i + 1][1]))

    if jumps:
        witnessed = False
        for s_lo, s_hi, _, _ in jumps:
            # Test the slice at every crossing point of the two jump geodesics.
            i_lo = int(np.argmin(np.abs(svals - s_lo)))
            i_hi = int(np.argmin(np.abs(svals - s_hi)))
            for rec in (records[i_lo], records[i_hi]):
                for t_evt, _ in rec.events:
                    t_sharp = _sharpen_singular_time(action, rec.geodesic, t_evt,
                                                    regular_dimension(action, profile))
                    verdict = infinitesimal_polarity(
                        action, rec.geodesic.point(t_sharp), profile, seed=polarity_seed)
                    if not verdict.is_polar:
                        witnessed = True
        if not witnessed:
            raise CoherenceError(
                "crossing-number discontinuity without a non-polar slice witness")
    verdict = "discontinuity found" if jumps else "continuous"
    return ContinuityReport(tuple(rows), tuple(jumps), verdict)


def _sharpen_singular_time(action: ActionSpec, geodesic: HorizontalGeodesic,
                           t_event: float, full_rank: int,
                           window: float = 1e-6) -> float:
    """Refine a detected singular-crossing parameter to machine resolution,
    so the slice representation is taken at the stratum itself rather than at
    a nearby regular point."""
    half = window * (geodesic.interval[1] - geodesic.interval[0])
    lo, hi = t_event - half, t_event + half

    def indicator(t):
        svals = np.linalg.svd(action.killing_values(geodesic.point(t)),
                              compute_uv=False)
        return float(svals[full_rank - 1]) if full_rank >= 1 else 0.0

    resolution = 1e-15 * max(1.0, abs(t_event))
    while hi - lo > resolution:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if indicator(m1) < indicator(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Coherence helpers
# ---------------------------------------------------------------------------

def equivariance_coherence_check(action: ActionSpec, geodesic: HorizontalGeodesic,
                                 generator, t_max=None, n_samples: int = 64) -> float:
    """Max deviation between the group-translated geodesic and the geodesic
    launched from the translated initial data; equivariance makes it ~ 0."""
    g = expm(np.asarray(generator, dtype=float))
    a, b = geodesic.interval
    t_hi = b if t_max is None else min(b, t_max)
    moved = HorizontalGeodesic(geodesic.space, g @ geodesic.base,
                               g @ geodesic.direction, (a, b))
    ts = np.linspace(a, t_hi, n_samples)
    dev = np.linalg.norm(geodesic.point(ts) @ g.T - moved.point(ts), axis=1)
    return float(dev.max())


def bounded_curvature_conditions(action: ActionSpec,
                           radii=(1.0, 0.5, 0.25, 0.125, 0.0625),
                           profile: ToleranceProfile = DEFAULT_TOL,
                           seed: int = 0, n_samples: int = 256) -> dict:
    """The three numerically testable equivalent conditions at the origin of
    a Euclidean linear action: bounded quotient curvature, vanishing
    kappa_bar * r^2 limit, and polarity of the slice at the origin.

    Quotients of cohomogeneity < 2 carry no 2-planes, so the curvature
    conditions hold trivially there.
    """
    origin = np.zeros(action.space.dimension)
    polar = infinitesimal_polarity(action, origin, profile, seed=seed).is_polar
    codim = foliation_codim(action, profile)
    if codim < 2 or is_regular_point(action, origin, profile):
        # Cohomogeneity < 2 carries no 2-planes; a regular origin means the
        # foliation is trivial near 0 and the quotient curvature vanishes.
        return {"kappa_bounded": True, "product_to_zero": True, "slice_polar": polar}
    rng = np.random.default_rng(seed)
    reg = regular_dimension(action, profile)
    direction = None
    for _ in range(100):
        cand = rng.standard_normal(action.space.dimension)
        cand /= np.linalg.norm(cand)
        if leaf_dimension(action, cand, profile) == reg:
            direction = cand
            break
    if direction is None:
        raise GeometryError("no regular probe direction found")
    probe = explosion_probe(action, origin, direction, radii, profile, n_samples, seed)
    kappas = [row[1] for row in probe.rows]
    kappa_bounded = kappas[-1] <= 2.0 * kappas[0] + EXPLOSION_LIMIT_TOL
    return {
        "kappa_bounded": bool(kappa_bounded),
        "product_to_zero": probe.verdict == "bounded",
        "slice_polar": polar,
        "probe": probe,
    }
