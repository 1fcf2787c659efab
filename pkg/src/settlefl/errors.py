"""Exception types shared across the package."""


class SettleError(Exception):
    """Base class for all library errors."""


class ZeroInverse(SettleError, ZeroDivisionError):
    pass


class ArityExceeded(SettleError, ValueError):
    pass


class Finalized(SettleError):
    """Raised when allocating into a sealed constraint system."""


class UnknownVariable(SettleError, KeyError):
    pass


class IncompleteWitness(SettleError, ValueError):
    pass


class OutOfRange(SettleError, ValueError):
    pass


class EmptyInput(SettleError, ValueError):
    pass


class BatchIndexOutOfRange(SettleError, IndexError):
    pass


class WitnessGenerationFailed(SettleError):
    """An honest prover cannot produce a satisfying witness for the inputs."""


class ShapeMismatch(SettleError):
    pass


class MaskViolation(SettleError, ValueError):
    pass


class InsufficientBalance(SettleError):
    pass


class ConfigInvalid(SettleError, ValueError):
    pass


class UnknownBehavior(SettleError, ValueError):
    pass


class UnknownModel(SettleError, ValueError):
    pass


class Revert(SettleError):
    """A contract call reverted. ``reason`` is a short machine-readable code."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail
