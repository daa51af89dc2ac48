"""Exception hierarchy for latinflow."""


class LatinflowError(Exception):
    """Base class for all latinflow errors."""


class GeometryError(LatinflowError):
    """Invalid geometry: non-positive dimensions, inverted or degenerate elements."""


class MeshFormatError(LatinflowError):
    """Malformed mesh file."""


class ConfigError(LatinflowError):
    """Invalid or incomplete case configuration."""


class SolverError(LatinflowError):
    """Linear solver failure (singular system, residual too large)."""


class DivergenceError(LatinflowError):
    """NaN or blow-up detected during the iteration."""


class OracleError(LatinflowError):
    """Failure inside a reference (oracle) solver."""
