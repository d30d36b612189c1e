"""Exception hierarchy.

Every validation failure raised by the library derives from :class:`QallocError`
(itself a ``ValueError``), which lets the command line map them to exit code 2.
"""


class QallocError(ValueError):
    """Base class for all input/validation errors."""


# circuit
class CircuitError(QallocError):
    pass


class IndexOutOfRange(CircuitError):
    pass


class ArityMismatch(CircuitError):
    pass


class DuplicateControl(CircuitError):
    pass


class AlreadyMeasured(CircuitError):
    pass


# statevec
class CapacityExceeded(QallocError):
    pass


class ZeroShots(QallocError):
    pass


class NotNormalized(QallocError):
    pass


# distload
class DistributionError(QallocError):
    pass


class DegenerateVariance(DistributionError):
    pass


class NonSymmetric(DistributionError):
    pass


class NotPSD(DistributionError):
    pass


class SingularCovariance(DistributionError):
    pass


# market
class ParseError(QallocError):
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


class NonPositiveLevel(ParseError):
    pass


class UnorderedDates(ParseError):
    pass


class MissingMonths(ParseError):
    pass


class TooShort(QallocError):
    pass


class TooFewRows(QallocError):
    pass


class DimensionMismatch(QallocError):
    pass


# portfolio
class LengthMismatch(QallocError):
    pass


class BadWeights(QallocError):
    pass


class EmptyPath(QallocError):
    pass
