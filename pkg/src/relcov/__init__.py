"""Reliability coverage of wireless service areas: simulation, tail statistics and dimensioning."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    FitFailed,
    InsufficientData,
    InvalidArgument,
    InvalidScenario,
    RelcovError,
    ResolutionLimit,
    TargetInfeasible,
)

__all__ = [
    "ConfigError", "FitFailed", "InsufficientData", "InvalidArgument", "InvalidScenario",
    "RelcovError", "ResolutionLimit", "TargetInfeasible", "__version__",
]
