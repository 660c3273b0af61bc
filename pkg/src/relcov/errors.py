"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class RelcovError(Exception):
    exit_code = 5


class InvalidArgument(RelcovError, ValueError):
    exit_code = 2


class ConfigError(RelcovError):
    exit_code = 2


class InvalidScenario(RelcovError, ValueError):
    exit_code = 2


class TargetInfeasible(RelcovError):
    """Raised when the requested coverage cannot be reached inside the search bracket."""

    exit_code = 3

    def __init__(self, message: str, eta_at_upper: float):
        super().__init__(message)
        self.eta_at_upper = eta_at_upper


class InsufficientData(RelcovError):
    exit_code = 4

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class FitFailed(RelcovError):
    exit_code = 5


class ResolutionLimit(RelcovError):
    """Outage target lies below what the samples and tail fit can resolve."""

    exit_code = 4

    def __init__(self, message: str, smallest_epsilon: float):
        super().__init__(message)
        self.smallest_epsilon = smallest_epsilon
