"""Exception and warning types shared across the package.

Every error raised deliberately by lomef derives from :class:`LomefError`,
so callers can catch the package's failures with a single except clause
while still discriminating on the specific condition.
"""

from __future__ import annotations


class LomefError(Exception):
    """Base class for all errors raised by lomef."""


class SeriesTooShort(LomefError):
    """A series is too short for the requested operation."""


class ZeroMean(LomefError):
    """Mean scaling is undefined because the series mean is zero."""


class NegativeValue(LomefError):
    """The log variance stabiliser was handed a negative value."""


class NonFiniteForecast(LomefError):
    """A forecast contained NaN or infinity before post-processing."""


class DivergedTraining(LomefError):
    """Iterative model training produced a non-finite loss."""


class PeriodTooLong(LomefError):
    """A seasonal period does not fit the series (needs two full cycles)."""


class InvalidBlockLength(LomefError):
    """Moving-block bootstrap block length outside 1..T."""


class UnstableSieve(LomefError):
    """Autoregressive sieve regeneration diverged even at order 1."""


class FitFailure(LomefError):
    """Every candidate model diverged during fitting."""


class EmptyNeighbourhood(LomefError):
    """An operation over neighbourhood members received no members."""


class MixedKinds(LomefError):
    """A model summary was asked to combine different explainer kinds."""


class ZeroDenominator(LomefError):
    """The scaled-error denominator (seasonal naive error) is zero."""


class LengthMismatch(LomefError):
    """Two vectors that must be aligned have different lengths."""


class DegenerateSample(LomefError):
    """A t-test sample has fewer than two values or zero variance."""


class TooFewRuns(LomefError):
    """Stability statistics need at least two runs."""


class EmptyGroup(LomefError):
    """Aggregation was asked to summarise an empty record group."""


class ParseError(LomefError):
    """A dataset or config file could not be parsed.

    Carries the offending line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(LomefError):
    """A dataset violated its structural invariants.

    ``violations`` holds one human-readable string per broken invariant.
    """

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class PipelineError(LomefError):
    """A full run failed after the inputs had validated."""


class ProtocolError(LomefError):
    """An external model subprocess replied with a malformed message."""


class Timeout(LomefError):
    """An external model subprocess did not reply within the deadline."""


class SingularDesignWarning(UserWarning):
    """A regression design matrix was rank-deficient; ridge fallback used."""
