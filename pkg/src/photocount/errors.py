class TruncationError(ValueError):
    """The Fock truncation is too small for the requested accuracy."""


class DivergenceError(ArithmeticError):
    """A series in the ordering parameter failed to converge."""
