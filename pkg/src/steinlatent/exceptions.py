"""Exception types raised across the package."""


class SteinLatentError(Exception):
    """Base class for package errors."""


class InvalidDimensionError(SteinLatentError, ValueError):
    pass


class ParameterError(SteinLatentError, ValueError):
    pass


class InvalidRankError(SteinLatentError, ValueError):
    pass


class NumericalError(SteinLatentError, ArithmeticError):
    pass


class NearZeroMatrixError(NumericalError):
    """The second-order moment matrix carries no detectable signal.

    Raised for purely linear links, where every Hessian of the link
    functions vanishes and the population matrix is zero.
    """


class ConfigError(SteinLatentError, ValueError):
    pass
