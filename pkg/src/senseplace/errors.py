"""Exception and warning types shared across the package."""

from __future__ import annotations


class SenseplaceError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(SenseplaceError):
    """Malformed data: wrong shape, non-finite entries, bad parameter."""


class InvalidRank(InvalidInput):
    """Requested mode count is outside the valid range."""


class InvalidCount(InvalidInput):
    """Requested sensor count is outside the valid range."""


class InvalidPoint(InvalidInput):
    """Point dimensionality does not match the region it is tested against."""


class InvalidMeasurement(InvalidInput):
    """Measurement vector does not match the fitted sensor count."""


class NotPositiveDefinite(SenseplaceError):
    """Matrix is not symmetric positive-definite."""


class RankDeficientBasis(SenseplaceError):
    """User-supplied mode matrix does not have full column rank."""


class DegeneratePrior(SenseplaceError):
    """Prior standard deviations or noise magnitude are not strictly positive."""


class InfeasibleConstraint(SenseplaceError):
    """Constrained selection cannot be completed.

    ``trace`` holds the partial pivot trace accumulated before the
    selection ran out of admissible candidates (``None`` when the
    infeasibility was detected before any pivoting).
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ParseError(SenseplaceError):
    """Syntax error in a constraint expression.

    ``offset`` is the byte offset of the offending token and ``expected``
    the set of token kinds that would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset
        self.expected = tuple(expected)


class UnknownVariable(ParseError):
    """Identifier in a constraint expression is not a known variable or function."""


class NotFitted(SenseplaceError):
    """Model method requires a prior call to ``fit``."""


class ConfigError(SenseplaceError):
    """Run configuration failed schema validation or required files are missing."""


class CurvePointError(SenseplaceError):
    """One point of an error-curve sweep failed; ``p`` identifies it."""

    def __init__(self, p: int, message: str):
        super().__init__(f"p={p}: {message}")
        self.p = p


class RankDeficiencyWarning(UserWarning):
    """Selection or reconstruction hit a rank-deficient system."""
