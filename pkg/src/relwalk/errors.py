"""Exception hierarchy.

Two branches matter for the CLI exit codes: ``ValidationError`` (bad or
inconsistent input, exit 2) and ``NumericalError`` (a computation could not
be carried out or an internal numerical guarantee failed, exit 3).
"""

from __future__ import annotations


class RelwalkError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RelwalkError):
    """Input data violates a documented precondition or schema."""


class NumericalError(RelwalkError):
    """A numerical computation failed or is not applicable."""


# -- relation construction ---------------------------------------------------

class NonPositiveMass(ValidationError):
    pass


class MassSumMismatch(ValidationError):
    pass


class EmptyClass(ValidationError):
    pass


class NotEquivalent(ValidationError):
    """Two points do not lie in the same class."""


# -- random walks -------------------------------------------------------------

class IsolatedPoint(ValidationError):
    pass


class RowSumError(ValidationError):
    pass


class AsymmetricSupport(ValidationError):
    pass


class DetailedBalanceViolation(ValidationError):
    """Carries the largest detailed-balance residual in ``residual``."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class BaseMeasureMismatch(ValidationError):
    pass


class ProbSumError(ValidationError):
    pass


class AsymmetricGeneratorSet(ValidationError):
    pass


# -- representations and diffusion --------------------------------------------

class NotUnitary(ValidationError):
    pass


class CycleInconsistency(ValidationError):
    """Carries the worst cycle residual in ``residual``."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class DimensionMismatch(ValidationError):
    pass


class MissingEdgeBlock(ValidationError):
    pass


class EigenFailure(NumericalError):
    pass


class DegenerateSpectrum(NumericalError):
    """The spectrum contains no value below the fixed cluster."""


class NoGap(NumericalError):
    pass


# -- 2-complexes ---------------------------------------------------------------

class DuplicateTriangle(ValidationError):
    pass


class DegenerateTriangle(ValidationError):
    pass


class EmptyLink(ValidationError):
    pass


class DisconnectedLink(NumericalError):
    """Link of ``vertex`` is disconnected, so its gap would be 0."""

    def __init__(self, message: str, vertex: int = -1):
        super().__init__(message)
        self.vertex = vertex


class IsolatedVertex(ValidationError):
    pass


class SupportViolation(NumericalError):
    pass


# -- isoperimetry ---------------------------------------------------------------

class EmptySet(ValidationError):
    pass


class DegenerateSet(ValidationError):
    pass


class ZeroField(ValidationError):
    pass


# -- documents -------------------------------------------------------------------

class ParseError(ValidationError):
    """Malformed document; ``pointer`` locates the offending field."""

    def __init__(self, message: str, pointer: str | None = None):
        if pointer:
            message = f"{message} (at {pointer})"
        super().__init__(message)
        self.pointer = pointer


class ConsistencyError(NumericalError):
    """An internal mathematical guarantee failed; indicates a bug."""
