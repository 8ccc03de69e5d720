"""Exception types raised across the package."""


class HarfeError(Exception):
    """Base class for all errors raised by :mod:`harfe`."""


class InvalidOrderError(HarfeError, ValueError):
    """Per-column nonzero budget ``q`` is outside ``[1, d]``."""


class InvalidSizeError(HarfeError, ValueError):
    """A size parameter (feature count, sample count, split count) is invalid."""


class ShapeError(HarfeError, ValueError):
    """Array dimensions do not agree."""


class InvalidSparsityError(HarfeError, ValueError):
    """Sparsity level ``s`` is outside ``[1, N]``."""


class IllConditionedSolveError(HarfeError, ArithmeticError):
    """The support-restricted normal equations could not be solved reliably.

    Attributes
    ----------
    condition_estimate : float
        Estimated 2-norm condition number of the restricted system.
    """

    def __init__(self, message, condition_estimate=float("nan")):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class EmptyModelError(HarfeError, ValueError):
    """The model has no nonzero coefficients."""


class SchemaVersionError(HarfeError, ValueError):
    """A serialized document carries an unsupported ``schema_version``."""


class CorruptFileError(HarfeError, ValueError):
    """A serialized document could not be decoded."""


class DataParseError(HarfeError, ValueError):
    """A CSV field could not be parsed; ``row`` is 1-based within the file."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyDatasetError(HarfeError, ValueError):
    """No usable rows were found."""


class ZeroNormError(HarfeError, ValueError):
    """A relative quantity was requested against a zero-norm reference."""


class BudgetExceededError(HarfeError, RuntimeError):
    """Brute-force enumeration would exceed the configured subset budget."""


class TraceTooShortError(HarfeError, ValueError):
    """Not enough iterations recorded for a convergence fit."""
