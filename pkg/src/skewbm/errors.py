"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConfigError(ValueError):
    """A simulation or CLI configuration violates its invariants."""


class ConvergenceError(RuntimeError):
    """A numerical procedure stopped before reaching its tolerance.

    The best available estimate is kept on the exception so callers can
    decide whether it is good enough.
    """

    def __init__(self, message: str, value: float = float("nan"), err_estimate: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.err_estimate = err_estimate
