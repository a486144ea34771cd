"""Exception types shared across the package."""

from __future__ import annotations


class PathBanditsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PathBanditsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(PathBanditsError, ValueError):
    """A configuration value is missing, malformed, or out of range."""


class SolverError(PathBanditsError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the last solve report so callers can inspect how far the
    solver got before giving up.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class StabilityError(PathBanditsError, RuntimeError):
    """A runtime invariant of an update rule was violated."""


class InfeasibleSliceError(PathBanditsError, ValueError):
    """A hyperplane slice does not intersect the unit ball."""


class EmitError(PathBanditsError, RuntimeError):
    """A result could not be serialized or written to disk."""


class RoundError(PathBanditsError, RuntimeError):
    """Wraps a failure inside an experiment loop with its round index."""

    def __init__(self, round_index: int, cause: Exception):
        super().__init__(f"round {round_index}: {cause}")
        self.round_index = round_index
        self.cause = cause
