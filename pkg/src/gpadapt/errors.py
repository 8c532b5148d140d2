"""Exceptions shared across the package."""


class ConditioningError(RuntimeError):
    """A dense factorization failed even after diagonal jitter escalation."""
