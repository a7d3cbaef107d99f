"""Exception hierarchy shared by the simulator modules."""


class RamanQEDError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(RamanQEDError, ValueError):
    pass


class UnphysicalGrid(RamanQEDError, ValueError):
    """Stokes grid would extend to non-positive frequencies."""


class OutOfSupport(RamanQEDError, ValueError):
    """Frequency lies outside the support of a profile or grid."""


class TooLarge(RamanQEDError, ValueError):
    pass


class NumericalError(RamanQEDError, ArithmeticError):
    pass


class StepTooLarge(RamanQEDError, ValueError):
    """RK4 step violates the spectral-radius stability guard."""


class InvalidFrame(RamanQEDError, ValueError):
    pass


class NotNormalized(RamanQEDError, ValueError):
    pass


class InvalidDensity(RamanQEDError, ValueError):
    pass


class InvalidSeries(RamanQEDError, ValueError):
    pass


class FitFailed(RamanQEDError, RuntimeError):
    """Nonlinear fit did not converge; ``diagnostics`` holds the solver state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
