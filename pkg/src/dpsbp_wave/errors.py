"""Exception types raised across the package."""


class DPSBPError(Exception):
    """Base class for all package errors."""


class UnsupportedOrder(DPSBPError, ValueError):
    pass


class GridTooSmall(DPSBPError, ValueError):
    pass


class DimensionMismatch(DPSBPError, ValueError):
    pass


class DimensionOverflow(DPSBPError, OverflowError):
    pass


class SingularMatrix(DPSBPError, ArithmeticError):
    pass


class NoConvergence(DPSBPError, RuntimeError):
    pass


class InadmissiblePenalty(DPSBPError, ValueError):
    pass


class UnsupportedPenalty(DPSBPError, ValueError):
    pass


class ZeroAlpha(DPSBPError, ValueError):
    pass


class InadmissibleProblem(DPSBPError, ValueError):
    pass


class DegenerateInput(DPSBPError, ValueError):
    pass


class LineSearchFailure(DPSBPError, RuntimeError):
    """Raised when the line search cannot find an acceptable step.

    The partially filled optimizer state is attached as ``state``.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ParseError(DPSBPError, ValueError):
    """Configuration could not be parsed or validated.

    ``diagnostics`` lists every violated constraint; ``line`` is set for
    syntax errors.
    """

    def __init__(self, message, diagnostics=None, line=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
        self.line = line
