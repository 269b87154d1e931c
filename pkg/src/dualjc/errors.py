"""Exception types raised across the package."""


class DualJCError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(DualJCError, ValueError):
    pass


class NonPositiveDetuningError(InvalidParameterError):
    """Raised when Delta - |Delta_F| <= 0 so that one mode loses its positive detuning."""


class InvalidRegimeError(InvalidParameterError):
    """A closed form was asked for outside the regime where it holds."""


class SingularClosedFormError(DualJCError, ZeroDivisionError):
    """A closed-form expression hit a vanishing denominator."""


class NoRealSolutionError(DualJCError, ArithmeticError):
    pass


class NotConvergedError(DualJCError, RuntimeError):
    pass


class OutOfWindowError(DualJCError, ValueError):
    pass


class NoRootError(DualJCError, ValueError):
    """No sign change was found inside the search window."""


class NoBoundaryError(DualJCError, ArithmeticError):
    pass


class SingularDriftError(DualJCError, ArithmeticError):
    pass


class UnstableDriftError(DualJCError, ArithmeticError):
    pass


class ZeroInversionError(DualJCError, ArithmeticError):
    """The spin projection Z vanished, so the stability matrix is undefined."""


class NonUniqueSteadyStateError(DualJCError, RuntimeError):
    pass


class TruncationTooSmallError(DualJCError, RuntimeError):
    pass


class GridTooSmallError(DualJCError, ValueError):
    pass


class UnknownFigureError(DualJCError, KeyError):
    pass


class ConfigError(DualJCError, ValueError):
    pass
