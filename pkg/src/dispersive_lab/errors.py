"""Exception hierarchy shared by all modules."""


class DispersiveLabError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidInputError(DispersiveLabError, ValueError):
    """A field or argument is malformed (non-finite samples, grid mismatch)."""


class InvalidParameterError(DispersiveLabError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DomainError(DispersiveLabError, ValueError):
    """The operation is undefined for this input (e.g. antiderivative of a non-mean-zero field)."""


class OutOfBandError(DispersiveLabError, ValueError):
    """A dyadic index lies outside the band resolved by the grid."""


class SingularPointError(DispersiveLabError, ValueError):
    """A symbol or resonance function was evaluated at a singular frequency."""


class UndefinedRatioError(DispersiveLabError, ZeroDivisionError):
    """A ratio with a vanishing denominator was requested."""


class AccuracyError(DispersiveLabError, RuntimeError):
    """A quadrature failed its node-doubling convergence check."""


class BlowupError(DispersiveLabError, RuntimeError):
    """The time integration produced a non-finite state.

    ``last_good_t`` is the last time with a finite state and ``diagnostics``
    holds the rows recorded before the failure.
    """

    def __init__(self, message, last_good_t, diagnostics=None):
        super().__init__(message)
        self.last_good_t = last_good_t
        self.diagnostics = list(diagnostics or [])
