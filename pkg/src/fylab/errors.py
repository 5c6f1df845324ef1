"""Exception types shared across the package."""


class FyLabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FyLabError, ValueError):
    """Invalid parameters for a potential, loss, dataset or run."""


class DomainError(FyLabError, ValueError):
    """Argument outside the domain where an operation is defined."""


class UnsupportedOperation(FyLabError, TypeError):
    """Operation needs a smooth potential but got the hinge."""


class BracketError(FyLabError, ValueError):
    """Root bracket could not be established."""


class AnalysisError(FyLabError, ArithmeticError):
    """A derived loss constant is degenerate."""


class NotSeparableError(FyLabError, ValueError):
    """The origin lies in the convex hull of the signed points."""


class DivergenceError(FyLabError, FloatingPointError):
    """An optimizer run produced non-finite or exploding values.

    The partial trace recorded so far is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
