"""Exception hierarchy shared by all sepwalk modules."""


class SepWalkError(Exception):
    """Base class for every error raised by this package."""


class MeasureError(SepWalkError, ValueError):
    """The input measure cannot be embedded."""


class NonCentered(MeasureError):
    pass


class MassDeficit(MeasureError):
    pass


class InfiniteFirstMoment(MeasureError):
    pass


class DegenerateMeasure(SepWalkError):
    """Raised (or recorded as a note) when mu is the point mass at 0."""


class TruncationHorizon(SepWalkError):
    """A query needs sites beyond the materialized window of a measure."""


class NoConvergenceWithinBudget(SepWalkError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularSystem(SepWalkError):
    pass


class ExcessCensoring(SepWalkError):
    pass
