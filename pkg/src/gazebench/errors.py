"""Exception hierarchy shared by every gazebench module."""


class GazeBenchError(Exception):
    """Base class for all gazebench errors."""


class InvalidInput(GazeBenchError, ValueError):
    pass


class InvalidParams(GazeBenchError, ValueError):
    pass


class InvalidSpec(GazeBenchError, ValueError):
    pass


class UndefinedStatistic(GazeBenchError, ArithmeticError):
    """A statistic has no value for the given data (zero variance, too few points)."""


class TrainingDiverged(GazeBenchError, ArithmeticError):
    pass


class CalibrationTimeout(GazeBenchError):
    pass


class NotReady(GazeBenchError):
    """The cursor engine was driven with an untrained network."""


class MissingRole(GazeBenchError):
    """A gaze or target circle needed for a distance was not detected."""


class EmptyWindow(GazeBenchError):
    """No samples fall inside the smoothing window; callers hold their last value."""


class EmptyCategory(GazeBenchError):
    pass


class EmptyData(GazeBenchError, ValueError):
    pass


class MalformedRecord(GazeBenchError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
