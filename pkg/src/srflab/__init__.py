"""Numerical laboratory for orbit foliations of linear isometry groups.

Jacobi fields, focal indices, quotient curvature, polarity, and crossing
numbers for isometric linear group actions on Euclidean spaces and round
spheres.
"""

from .actions import (
    PRESET_TABLE,
    ActionSpec,
    StratumInfo,
    foliation_codim,
    horizontal_space,
    isotropy_algebra,
    is_regular_point,
    leaf_dimension,
    leaf_tangent,
    make_horizontal_geodesic,
    preset,
    regular_dimension,
    slice_representation,
    stratum_of,
)
from .errors import (
    CoherenceError,
    GeometryError,
    ScanResolutionError,
    ScenarioError,
    SrfLabError,
)
from .geometry import (
    DEFAULT_TOL,
    AmbientSpace,
    HorizontalGeodesic,
    Subspace,
    ToleranceProfile,
    curvature_endomorphism,
    orthogonal_complement,
    parallel_frame,
    parallel_transport,
    project_onto,
    rank_with_tol,
)
from .jacobi import (
    FocalReport,
    JacobiFamily,
    JacobiField,
    focal_scan,
    index,
    leaf_lagrangian,
    symplectic_complement,
    vertical_family,
    quotient_focal_index,
    wronskian,
)
from .quotient import (
    ConjugateReport,
    ContinuityReport,
    CrossingRecord,
    ExplosionProbe,
    PolarityVerdict,
    conjugate_witness_search,
    crossing_continuity_probe,
    crossing_number,
    equivariance_coherence_check,
    explosion_probe,
    horizontal_conjugate_test,
    infinitesimal_polarity,
    max_quotient_curvature,
    oneill_curvature,
    polarity_test,
    random_horizontal_geodesic,
    bounded_curvature_conditions,
    vertical_bracket,
)

__version__ = "0.1.0"
