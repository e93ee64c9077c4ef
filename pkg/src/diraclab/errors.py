"""Exception types shared across the package."""

from __future__ import annotations


class DiracLabError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(DiracLabError, ValueError):
    """An argument violates a documented precondition (bad value, shape or dimension)."""


class UnsupportedDegreeError(DiracLabError):
    """A formal word product exceeds the supported degree (at most two generators)."""


class InvalidGraphError(DiracLabError):
    """A star graph or a collection of star graphs is malformed."""


class OutOfInjectivityError(DiracLabError):
    """A point lies outside the injectivity domain of the exponential map."""


class OutOfNeighbourhoodError(DiracLabError):
    """A point lies outside the sampling neighbourhood around the base point."""


class SamplingFailureError(DiracLabError):
    """Rejection sampling failed to produce enough points within the retry budget."""


class NumericFailureError(DiracLabError):
    """An iterative numeric routine failed to converge.

    Carries the best estimate so far and a diagnostics dict so callers can
    inspect how far the routine got.
    """

    def __init__(self, message: str, best=None, diagnostics: dict | None = None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class ConfigError(DiracLabError):
    """A configuration file or flag set is invalid; message includes the offending line."""
