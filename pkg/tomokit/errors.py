"""
Error hierarchy for Tomokit.

Validation problems derive from InvalidInput (CLI exit code 2),
numerical breakdowns from NumericalError (CLI exit code 3).
"""


class TomokitError(Exception):
    """Base class for every error raised by the engine."""


class InvalidInput(TomokitError, ValueError):
    """An argument violates a documented precondition or invariant."""


class NumericalError(TomokitError, ArithmeticError):
    """A computation broke down numerically."""


# --- quantum ---

class NonHermitian(InvalidInput):
    pass


class NotPositive(InvalidInput):
    pass


class BadTrace(InvalidInput):
    pass


class DimensionMismatch(InvalidInput):
    pass


class DegenerateT(NumericalError):
    pass


class FactorizationFailed(NumericalError):
    pass


# --- states ---

class IndexOutOfRange(InvalidInput):
    pass


class NegativeParameter(InvalidInput):
    pass


class DegenerateCat(InvalidInput):
    pass


class DimensionTooSmall(InvalidInput):
    pass


class ZeroVector(InvalidInput):
    pass


class BadRank(InvalidInput):
    pass


class EmptyRange(InvalidInput):
    pass


# --- measurement ---

class NonMonotonicGrid(InvalidInput):
    pass


class WrongKind(InvalidInput):
    pass


class ZeroMass(InvalidInput):
    pass


# --- noise ---

class BadZeta(InvalidInput):
    pass


class BadFraction(InvalidInput):
    pass


class BadProportion(InvalidInput):
    pass


# --- grad / tomography ---

class LengthMismatch(InvalidInput):
    pass


class ShapeMismatch(InvalidInput):
    pass


class NonFiniteLoss(NumericalError):
    """The objective stopped being finite during training."""

    def __init__(self, epoch, actor="mle", value=None):
        self.epoch = epoch
        self.actor = actor
        self.value = value
        super().__init__(f"{actor} loss became non-finite ({value}) at epoch {epoch}")


# --- dataset ---

class IoError(InvalidInput, OSError):
    pass


class FormatVersionMismatch(InvalidInput):
    pass


class ChecksumMismatch(InvalidInput):
    pass


def exit_code_for(exc):
    """Map an exception to the CLI exit-code contract (2 input, 3 numerical)."""
    if isinstance(exc, NumericalError):
        return 3
    return 2
