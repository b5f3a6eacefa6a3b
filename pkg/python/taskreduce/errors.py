"""Exception hierarchy shared by every taskreduce module."""
from __future__ import annotations

from typing import Any, Mapping


class TaskReduceError(Exception):
    """Base class for all library errors."""


class ConfigurationError(TaskReduceError, ValueError):
    """Invalid construction input: mismatched spaces, bad kernels, bad config values."""


class UnsupportedOperationError(TaskReduceError):
    """The operation needs finite, tabular spaces and was given something else."""


class PreconditionError(TaskReduceError):
    """A documented precondition does not hold (e.g. a non-admissible policy was supplied)."""


class EnumerationCapError(TaskReduceError):
    def __init__(self, what: str, count: int, cap: int):
        self.what = what
        self.count = count
        self.cap = cap
        super().__init__(f"refusing to enumerate {count} {what}: cap is {cap}; supply an explicit family")


class UsageError(TaskReduceError):
    """API misuse, e.g. backward() without a recorded forward tape."""


class TrainingError(TaskReduceError):
    def __init__(self, message: str, diagnostics: Mapping[str, Any] | None = None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class CalibrationError(TaskReduceError):
    """Individual training did not clear the calibration floor."""


class ComplexityUndefinedError(TaskReduceError):
    """Relative complexity over an empty admissible set."""


__all__ = [
    "TaskReduceError", "ConfigurationError", "UnsupportedOperationError", "PreconditionError",
    "EnumerationCapError", "UsageError", "TrainingError", "CalibrationError",
    "ComplexityUndefinedError",
]
