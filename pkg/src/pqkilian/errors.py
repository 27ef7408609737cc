class PqKilianError(Exception):
    """Base class for all library errors."""


class InvalidParameter(PqKilianError, ValueError):
    pass


class LengthMismatch(PqKilianError, ValueError):
    pass


class InvalidQuery(PqKilianError, ValueError):
    pass


class NotAWitness(PqKilianError, ValueError):
    pass


class InvalidRandomness(PqKilianError, ValueError):
    pass


class ProtocolError(PqKilianError):
    """Out-of-order or malformed protocol message; the session is poisoned."""


class NumericalDegeneracy(PqKilianError, ArithmeticError):
    """A measurement selected a branch whose probability is below 1e-12."""


class DecompositionFailed(PqKilianError, ArithmeticError):
    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = residuals or {}


class RegisterCapExceeded(PqKilianError, ValueError):
    pass


class PostSelectionFailed(PqKilianError, ArithmeticError):
    pass


class NotACollision(PqKilianError, ValueError):
    pass
