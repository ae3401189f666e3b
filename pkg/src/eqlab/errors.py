"""Exception types shared across the package."""


class EqLabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EqLabError, ValueError):
    """Input outside the mathematical domain (e.g. non-positive price)."""


class UnsupportedFamilyError(EqLabError, TypeError):
    """Operation requires a demand family the economy does not use."""


class OutOfConeError(EqLabError):
    """A constructed price left the positive cone."""


class ConvergenceError(EqLabError):
    """Iterative solver failed to reach tolerance.

    Carries the last residual norm and iteration count.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ContinuationError(EqLabError):
    """A continuation step jumped further than the configured cap allows."""


class DegenerateChartError(EqLabError):
    """Chart Jacobian is rank-deficient at the probed point."""


class NonOrientableSamplingError(EqLabError):
    """Unit normals could not be consistently oriented across the grid."""


class PreconditionError(EqLabError, ValueError):
    """Caller violated a documented precondition."""


class QuadratureError(EqLabError):
    """Quadrature failed (e.g. degenerate metric at a node)."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConfigError(EqLabError, ValueError):
    """Experiment configuration is invalid; ``path`` locates the offender."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
