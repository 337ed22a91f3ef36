"""Exception hierarchy shared by all chsurf modules."""


class ChsurfError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(ChsurfError):
    """Degenerate level-set gradient or failed surface projection."""


class MeshError(ChsurfError):
    """Invalid or degenerate triangulation."""


class AssemblyError(ChsurfError):
    """Element-level assembly failure (degenerate element, missing data)."""


class LinearSolveError(ChsurfError):
    """Linear solver breakdown or non-convergence."""


class BlowUpError(ChsurfError):
    """Non-finite values detected in a state vector or nonlinearity."""


class ConfigError(ChsurfError):
    """Invalid experiment configuration."""
