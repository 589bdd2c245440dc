"""Exception hierarchy.

Every validation failure raised by the library derives from
:class:`MvLorenzError`, which is itself a ``ValueError`` so callers that only
care about bad input can catch the builtin.
"""


class MvLorenzError(ValueError):
    """Base class for all validation errors raised by mvlorenz."""


# data model
class NegativeValueError(MvLorenzError):
    pass


class ZeroColumnError(MvLorenzError):
    pass


class TooFewRowsError(MvLorenzError):
    pass


class NonpositiveWeightError(MvLorenzError):
    pass


class OutOfRangeError(MvLorenzError):
    pass


class WrongDimensionError(MvLorenzError):
    pass


class DimensionMismatchError(MvLorenzError):
    pass


# copulas
class UnsupportedDimensionError(MvLorenzError):
    pass


class ParameterOutOfDomainError(MvLorenzError):
    pass


class UnsupportedFamilyError(MvLorenzError):
    pass


class UnattainableError(MvLorenzError):
    pass


# transfers
class IndexOutOfRangeError(MvLorenzError):
    pass


class UnequalWeightsError(MvLorenzError):
    pass


class NotRicherError(MvLorenzError):
    pass


class NegativeResultError(MvLorenzError):
    pass


class InvalidTransferError(MvLorenzError):
    pass


# ingestion
class MissingColumnError(MvLorenzError):
    pass


class ParseError(MvLorenzError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyResultError(MvLorenzError):
    pass


class ConfigError(MvLorenzError):
    pass
