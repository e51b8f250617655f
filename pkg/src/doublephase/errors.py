"""Exception taxonomy shared across the package.

NumericError maps to CLI exit code 4, NotApplicable to exit code 3, and
plain ValueError (domain/config violations) to exit code 2.
"""

from __future__ import annotations


class NumericError(RuntimeError):
    """A numerical routine failed to reach its stated tolerance."""

    def __init__(self, message: str, **info):
        super().__init__(message)
        self.info = dict(info)


class NoSolutionFound(NumericError):
    """Shooting bracket produced no sign change."""


class NotApplicable(RuntimeError):
    """Hypotheses of the requested check fail for the given data."""

    def __init__(self, message: str, failed=()):
        super().__init__(message)
        self.failed = list(failed)


class RegimeError(ValueError):
    """Parameters violate the structural regime an operation assumes."""
