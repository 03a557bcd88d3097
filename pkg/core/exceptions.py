class UpliftError(Exception):
    """Base class for every domain error raised by uplift_rank."""


class ConfigError(UpliftError):
    """Invalid configuration or command usage."""


class EmptyCohort(UpliftError):
    """A treated or control cohort is empty where both are required."""


class InvalidCost(UpliftError):
    """Costs cannot back a budget constraint, e.g. negative or all zero."""


class ParseError(UpliftError):
    """A data row could not be parsed."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SchemaError(UpliftError):
    """Required columns are missing from a table."""


class InvalidShape(UpliftError):
    """A network architecture or array has an invalid shape."""


class ShapeMismatch(UpliftError):
    """Array shapes disagree with each other or with the model."""


class NonFinite(UpliftError):
    """An objective or gradient evaluated to NaN or Inf."""


class SingularSystem(UpliftError):
    """A linear system has no unique solution."""


class Undefined(UpliftError):
    """A metric is undefined for the given inputs, e.g. a zero denominator."""
