"""Exception hierarchy shared by all rsfield modules."""


class RsFieldError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RsFieldError):
    """Invalid parameter domain (modulus, dimensions, malformed input)."""


class SingularityError(RsFieldError):
    """An argument landed too close to the period lattice or a pole."""


class SingularMatrixError(RsFieldError):
    """Matrix inversion requested for a numerically singular matrix."""


class ConvergenceError(RsFieldError):
    """An iteration (series, QR, Newton) failed to converge."""


class PrecisionError(RsFieldError):
    """Two independent numerical estimates disagree beyond tolerance."""


class BranchError(RsFieldError):
    """Logarithm branch could not be chosen consistently."""


class StepFailureError(ConvergenceError):
    """A discrete time step failed; carries the last residual seen."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class StiffnessError(RsFieldError):
    """Adaptive integrator step size underflowed."""


class IntegrationError(RsFieldError):
    """The flow raised mid-integration; carries the failure time."""

    def __init__(self, message: str, t: float = float("nan")):
        super().__init__(message)
        self.t = t


class ConfigError(RsFieldError):
    """Invalid run configuration or CLI usage."""
