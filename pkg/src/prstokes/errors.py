"""Exception hierarchy shared by all modules."""


class PrStokesError(Exception):
    """Base class for library errors."""


class TopologyError(PrStokesError):
    """Mesh connectivity is not a conforming 2-manifold triangulation."""


class GeometryError(PrStokesError):
    """Degenerate or otherwise invalid triangle geometry."""


class MeshParseError(PrStokesError):
    """Malformed mesh file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapabilityError(PrStokesError):
    """Requested combination of options is not supported."""


class DomainError(PrStokesError):
    """Evaluation point outside the admissible domain."""


class SingularityError(DomainError):
    """Evaluation at a singular point of the exact solution."""


class UsageError(PrStokesError):
    """Inconsistent arguments passed to an operation."""


class SolverError(PrStokesError):
    """Linear solve failed (singular factorization or bad residual)."""


class ConfigError(PrStokesError):
    """Invalid study configuration."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
