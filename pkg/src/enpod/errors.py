"""Exception hierarchy shared by all enpod modules."""


class EnpodError(Exception):
    """Base class for all toolkit errors."""


class GeometryError(EnpodError):
    """Domain parameters describe an invalid geometry."""


class ResolutionError(EnpodError):
    """Mesh generation produced a degenerate element."""


class ParseError(EnpodError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantError(EnpodError):
    """A structural invariant of a loaded or constructed object is violated."""


class DimensionError(EnpodError):
    """An array argument has the wrong length or shape."""


class SingularMatrixError(EnpodError):
    """Factorization hit a zero pivot; carries the pivot index when known."""

    def __init__(self, message, pivot=None):
        if pivot is not None:
            message = f"{message} (pivot index {pivot})"
        super().__init__(message)
        self.pivot = pivot


class NonConvergence(EnpodError):
    """An iteration failed to reach its tolerance; carries the final residual."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (final residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class ConfigError(EnpodError):
    """A run configuration violates one or more invariants."""


class GridMismatchError(EnpodError):
    """Two trajectories are sampled on different time grids."""


class RankError(EnpodError):
    """A requested basis mode is numerically null."""


class StabilityAbort(EnpodError):
    """The time-step stability condition failed and the run is configured to abort."""
