"""Exception types raised across the toolkit.

Every error derives from :class:`FouError`. Errors raised inside a staged
pipeline (``estimate.fit``) carry a ``stage`` attribute naming the step that
failed; the CLI maps error families onto exit codes.
"""

from __future__ import annotations


class FouError(Exception):
    """Base class for all toolkit errors."""

    stage: str | None = None

    def __init__(self, message: str = "", *, stage: str | None = None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage


class ValidationError(FouError, ValueError):
    """Malformed input (spec, path, configuration). CLI exit code 2."""

    def __init__(self, message: str = "", *, pointer: str = "", stage: str | None = None):
        super().__init__(message, stage=stage)
        self.pointer = pointer


class InvalidSpec(ValidationError):
    pass


class NumericalError(FouError, ArithmeticError):
    """A numerical or estimation-stage failure. CLI exit code 3."""


class CirculantNotPSD(NumericalError):
    pass


class UnsupportedModel(ValidationError):
    pass


class SingularAtZero(ValidationError):
    pass


class QuadratureNotConverged(NumericalError):
    pass


class NotAFilter(ValidationError):
    pass


class PathTooShort(NumericalError):
    pass


class DegeneratePath(NumericalError):
    pass


class ZeroVariation(NumericalError):
    pass


class NonPositiveRadicand(NumericalError):
    pass


class NonPositiveBase(NumericalError):
    pass


class FrequencyAboveNyquist(ValidationError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class LengthMismatch(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class ExperimentUnstable(FouError, RuntimeError):
    """Too many Monte Carlo replications failed. CLI exit code 4."""
