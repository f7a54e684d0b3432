"""Exception hierarchy shared by the training pipeline and the CLI."""

from __future__ import annotations


class ReflectSegError(Exception):
    """Base class for all errors raised by reflectseg."""


class ConfigError(ReflectSegError, ValueError):
    """Raised when a configuration is inconsistent or malformed."""


class DataError(ReflectSegError):
    """Raised when dataset files are missing, unreadable or out of range."""


class CheckpointError(ReflectSegError):
    """Raised when a checkpoint cannot be read or does not match the model."""


class DivergenceError(ReflectSegError):
    """Raised when a loss component becomes non-finite during training."""

    def __init__(self, message: str, snapshot: dict[str, object] | None = None) -> None:
        """Initialize the error.

        Args:
            message: Human readable description
            snapshot: Diagnostic values captured at the failing iteration
        """
        super().__init__(message)
        self.snapshot: dict[str, object] = snapshot or {}
