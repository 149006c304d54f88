"""Exception hierarchy shared by every layer of the package."""


class FlowError(Exception):
    """Base class for all errors raised by comonotone_flow."""


class SingularMatrix(FlowError, ArithmeticError):
    pass


class NotSymmetric(FlowError, ValueError):
    pass


class DimensionMismatch(FlowError, ValueError):
    pass


class DomainError(FlowError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class StepSizeUnderflow(FlowError, RuntimeError):
    pass


class NonFiniteDerivative(FlowError, FloatingPointError):
    pass


class NoConvergence(FlowError, RuntimeError):
    pass


class MissingReference(FlowError, ValueError):
    """A diagnostic needs the reference solution ``x_star`` but none was given."""


class InsufficientData(FlowError, ValueError):
    pass


class NonPositiveValue(FlowError, ValueError):
    pass


class ConfigError(FlowError, ValueError):
    """Raised for malformed experiment configs. ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
