"""Exception hierarchy shared by all modules."""


class PenaltyOptError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(PenaltyOptError, ValueError):
    pass


class NonFiniteProjection(PenaltyOptError):
    """The projection onto the set is not a finite point set (e.g. sphere center)."""


class NonFiniteValue(PenaltyOptError, ArithmeticError):
    pass


class PointNotOnSet(PenaltyOptError, ValueError):
    pass


class UnsupportedTangent(PenaltyOptError):
    pass


class UnsupportedKind(PenaltyOptError):
    pass


class ValidationError(PenaltyOptError, ValueError):
    """A model or problem description failed a consistency check."""


class GradientMismatch(ValidationError):
    pass


class InfeasibleStart(ValidationError):
    pass


class WrongSetShape(PenaltyOptError, ValueError):
    pass


class MissingFeasiblePoint(PenaltyOptError):
    pass


class MissingLowerBound(PenaltyOptError):
    pass


class InnerSolveFailure(PenaltyOptError):
    pass


class BacktrackExhausted(PenaltyOptError):
    pass


class MaxItersExceeded(PenaltyOptError):
    pass


class ResolutionTooCoarse(PenaltyOptError, ValueError):
    """The requested grid would contain more points than allowed."""


class ParseError(PenaltyOptError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
