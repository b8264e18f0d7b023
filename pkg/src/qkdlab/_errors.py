"""Exception types shared across qkdlab."""


class ParameterError(ValueError):
    """A numeric argument lies outside the range where the model is defined."""


class ContractViolation(ValueError):
    """An input breaks a structural precondition (e.g. a word is not a codeword)."""


class ProtocolViolation(RuntimeError):
    """A party received a message it cannot accept in its current state."""
