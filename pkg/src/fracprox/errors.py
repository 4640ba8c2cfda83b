"""Exception types raised by fracprox."""


class FracProxError(Exception):
    """Base class for all fracprox errors."""


class DimensionMismatch(FracProxError, ValueError):
    pass


class NonFiniteInput(FracProxError, ValueError):
    pass


class DegenerateMatrix(FracProxError, ValueError):
    pass


class DegenerateObservation(FracProxError, ValueError):
    pass


class StepSizeOutOfRange(FracProxError, ValueError):
    pass


class SparsityOutOfRange(FracProxError, ValueError):
    pass


class ConvexityViolated(FracProxError, ValueError):
    pass


class BelowThreshold(FracProxError, ValueError):
    pass


class ArccosDomainViolation(FracProxError, ValueError):
    pass


class NonFiniteIterate(FracProxError, ArithmeticError):
    """An iterate became NaN or infinite.

    The trace recorded up to the failing iteration is kept on ``run``.
    """

    def __init__(self, message, run=None):
        super().__init__(message)
        self.run = run
