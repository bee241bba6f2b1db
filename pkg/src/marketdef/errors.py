"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class MarketDefError(Exception):
    exit_code = 3


class ConfigError(MarketDefError):
    """Bad configuration or schema (missing column, unknown option)."""

    exit_code = 2


class SchemaError(ConfigError):
    pass


class DataError(MarketDefError):
    exit_code = 3


class ParseError(DataError):
    pass


class DomainError(DataError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionError(DomainError):
    pass


class DegenerateColumnError(DomainError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"column {column!r} has zero standard deviation")


class InfeasibleError(DomainError):
    pass


class SingularDesignError(DomainError):
    pass


class UnitError(DomainError):
    pass


class ReferenceDataError(DomainError):
    pass


class ConvergenceError(MarketDefError):
    exit_code = 4


class OutputError(DataError, OSError):
    """An output file or directory could not be written."""
