"""Exception and warning types shared across the package."""


class SunError(Exception):
    """Base class for all errors raised by sunlib."""


class ShapeMismatch(SunError, ValueError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class NotPositiveDefinite(SunError, ValueError):
    def __init__(self, message, which=None):
        super().__init__(message)
        self.which = which


class NotCorrelationMatrix(SunError, ValueError):
    pass


# short alias used by parameter validation
NotCorrelation = NotCorrelationMatrix


class RankDeficient(SunError, ValueError):
    pass


class AcceptanceTooLow(SunError, RuntimeError):
    pass


class MaxIterations(SunError, RuntimeError):
    pass


class DegenerateSample(SunError, ValueError):
    pass


class ToleranceNotReached(UserWarning):
    """Issued when an integration engine returns a best estimate whose error
    estimate exceeds the requested absolute tolerance."""
