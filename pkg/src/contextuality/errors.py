"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ContextualityError(Exception):
    """Base class for every error raised by this package."""


# --- linear algebra ---------------------------------------------------------

class DimensionMismatch(ContextualityError):
    """Operands do not share the Hilbert-space dimension they must."""


class NotHermitian(ContextualityError):
    """Matrix fails the Hermiticity check beyond tolerance."""


class DidNotConverge(ContextualityError):
    """Iterative eigensolver failed to reach its convergence threshold."""


class Incompatible(ContextualityError):
    """Operators (or their projectors) do not commute within tolerance."""


class OutOfRange(ContextualityError):
    """A numeric value lies outside its admissible interval."""


# --- scenario ingestion -----------------------------------------------------

class ParseError(ContextualityError):
    """Malformed scenario text; carries the position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(ContextualityError):
    """Well-formed input that violates a scenario constraint."""

    def __init__(self, label: str, message: str):
        super().__init__(f"{label}: {message}")
        self.label = label


class NotPositive(ContextualityError):
    """Matrix has an eigenvalue below -tolerance."""


class BadTrace(ContextualityError):
    """Matrix trace differs from 1 beyond tolerance."""


# --- contexts ---------------------------------------------------------------

class EmptySubset(ContextualityError):
    """Marginalization target is empty."""


class NotSubset(ContextualityError):
    """Marginalization target is not contained in the context."""


class IncompatibleMarginals(ContextualityError):
    """Overlapping context tables disagree on shared marginals."""


# --- global feasibility -----------------------------------------------------

class ModelIncoherent(ContextualityError):
    """Empirical model failed its compatibility check; no LP is assembled."""


class NumericalFailure(ContextualityError):
    """Solver could not reach a verdict with a valid certificate or table."""


class InfeasibleSystem(ContextualityError):
    """Operation requires a feasible system but the LP has no solution."""


class NotInfeasible(ContextualityError):
    """Witness extraction requested on a feasible system."""


# --- simulator --------------------------------------------------------------

class DegenerateDistribution(ContextualityError):
    """Sampling weights do not sum to 1 within tolerance."""


class ZeroConditional(ContextualityError):
    """Conditional distribution requested for a zero-probability property."""


class CalibrationFailure(ContextualityError):
    """A calibration run left the pointer at the wrong position."""

    def __init__(self, message: str, run: int):
        super().__init__(message)
        self.run = run


class EmptyInput(ContextualityError):
    """Aggregation over an empty record list."""


class MixedHandles(ContextualityError):
    """Aggregation over records taken with different handle settings."""


# --- cli --------------------------------------------------------------------

class UnknownCell(ContextualityError):
    """Cell specification names an unknown observable or outcome."""
