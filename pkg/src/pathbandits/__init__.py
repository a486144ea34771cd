"""Path-length-adaptive bandit algorithms and a seeded experiment harness."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    EmitError,
    InfeasibleSliceError,
    PathBanditsError,
    RoundError,
    SolverError,
    StabilityError,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "EmitError",
    "InfeasibleSliceError",
    "PathBanditsError",
    "RoundError",
    "SolverError",
    "StabilityError",
]
