"""Rank-drop event detection along a parameter interval.

The scanned object is a matrix-valued function t -> M(t) whose rank drops at
isolated parameters.  Since the smallest singular value is nonnegative,
sign-based root finding does not apply; instead the scan locates local
minima of the relevant singular value on a uniform grid, refines each
candidate by ternary search, and classifies it by counting singular values
below a relative cutoff tied to the global scale of the matrix family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScanResolutionError
from .geometry import DEFAULT_TOL, ToleranceProfile

#: A local minimum of the indicator is refined only if it dips below this
#: fraction of the global scale; shallow noise-floor minima are skipped.
DIP_FRACTION = 0.1

DEFAULT_GRID = 2048


@dataclass(frozen=True)
class ScanResult:
    """Interior events plus rank deficiencies at the two endpoints."""

    interior_events: tuple  # ((t, drop), ...) strictly increasing, drops >= 1
    drop_at_left: int
    drop_at_right: int
    global_scale: float


def _sigma_profile(matrix_fn, ts, full_rank):
    """Singular values of M(t) on a batch of parameters; returns (svals,
    indicator) where indicator[i] = sigma_full_rank(t_i)."""
    mats = matrix_fn(ts)
    svals = np.linalg.svd(mats, compute_uv=False)
    if full_rank > svals.shape[-1]:
        raise ValueError("full_rank exceeds matrix dimensions")
    return svals, svals[..., full_rank - 1]


def _deficiency(matrix_fn, t, full_rank, cutoff):
    svals = np.linalg.svd(matrix_fn(np.array([t]))[0], compute_uv=False)
    return int(np.sum(svals[:full_rank] <= cutoff))


def _refine_minimum(fn, lo, hi, resolution):
    """Ternary search for the minimum of a V-shaped scalar function."""
    flo, fhi = fn(lo), fn(hi)
    while hi - lo > resolution:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if fn(m1) < fn(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def scan_rank_drops(matrix_fn, interval, full_rank,
                    profile: ToleranceProfile = DEFAULT_TOL,
                    grid: int = DEFAULT_GRID) -> ScanResult:
    """Locate the parameters where rank(M(t)) < full_rank.

    matrix_fn maps an array of parameters (N,) to a stack of matrices
    (N, rows, cols).  Events at the interval endpoints are reported
    separately so callers can honor open/closed interval semantics.
    """
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError("interval must satisfy a < b")
    if full_rank <= 0:
        return ScanResult((), 0, 0, 0.0)

    ts = np.linspace(a, b, grid)
    svals, indicator = _sigma_profile(matrix_fn, ts, full_rank)
    global_scale = float(svals[..., 0].max())
    if global_scale < profile.zero_abs_tol:
        # The whole family is numerically zero: rank 0 everywhere is not an
        # isolated event, treat as no events (callers see rank via cutoff).
        return ScanResult((), full_rank, full_rank, global_scale)
    cutoff = max(profile.rank_rel_tol * global_scale, profile.zero_abs_tol)

    drop_left = int(np.sum(np.linalg.svd(matrix_fn(np.array([a]))[0],
                                         compute_uv=False)[:full_rank] <= cutoff))
    drop_right = int(np.sum(np.linalg.svd(matrix_fn(np.array([b]))[0],
                                          compute_uv=False)[:full_rank] <= cutoff))

    h = (b - a) / (grid - 1)
    resolution = max(profile.bisect_resolution * (b - a), 1e-14 * max(abs(a), abs(b), 1.0))

    def scalar_indicator(t):
        return float(np.linalg.svd(matrix_fn(np.array([t]))[0],
                                   compute_uv=False)[full_rank - 1])

    candidates = []
    for i in range(1, grid - 1):
        if (indicator[i] <= indicator[i - 1] and indicator[i] <= indicator[i + 1]
                and indicator[i] < DIP_FRACTION * global_scale):
            candidates.append(i)

    events = []
    margin = 2.0 * resolution + 1e-12 * (b - a)
    for i in candidates:
        t_star = _refine_minimum(scalar_indicator, ts[i - 1], ts[i + 1], resolution)
        if t_star <= a + margin or t_star >= b - margin:
            continue  # endpoint deficiencies are reported separately
        drop = _deficiency(matrix_fn, t_star, full_rank, cutoff)
        if drop >= 1:
            events.append((t_star, drop))

    events.sort()
    merged = []
    for t_star, drop in events:
        if merged and abs(t_star - merged[-1][0]) <= 10.0 * resolution:
            # Same event found from two adjacent grid cells.
            merged[-1] = (merged[-1][0], max(merged[-1][1], drop))
        elif merged and abs(t_star - merged[-1][0]) <= 2.0 * h:
            raise ScanResolutionError(
                f"two rank-drop events within one grid cell near t = {t_star:.6g}; "
                f"re-run with a finer grid (current grid = {grid})")
        else:
            merged.append((t_star, drop))

    return ScanResult(tuple(merged), drop_left, drop_right, global_scale)
