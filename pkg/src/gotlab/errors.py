"""Shared exception types, mapped to CLI exit codes by gotlab.cli."""

__all__ = ["UsageError", "CapabilityError"]


class UsageError(ValueError):
    """Bad input or configuration (CLI exit code 2)."""


class CapabilityError(RuntimeError):
    """Request outside supported problem sizes/shapes (CLI exit code 3)."""
