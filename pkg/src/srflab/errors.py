"""Exception hierarchy shared across the library."""


class SrfLabError(Exception):
    """Base class for all library-specific errors."""


class GeometryError(SrfLabError, ValueError):
    """Dimension mismatches, off-manifold points, non-normal vectors."""


class ScanResolutionError(SrfLabError, RuntimeError):
    """The event-detection grid is too coarse to separate two events.

    Callers should re-run with a finer grid.
    """


class CoherenceError(SrfLabError, RuntimeError):
    """An internal cross-check between two independent computations failed.

    This signals either a tolerance misconfiguration or a genuine bug; the
    CLI maps it to exit code 2 so CI can gate on it.
    """


class ScenarioError(SrfLabError, ValueError):
    """Invalid scenario configuration (unknown preset, bad generators, ...)."""
