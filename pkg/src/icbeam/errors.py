"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands have incompatible or non-square shapes."""


class NotPositiveDefinite(ValueError):
    """A matrix required to be Hermitian positive definite is not.

    Typically signals a non-positive noise power or a numerically
    degenerate configuration.
    """


class NonFinite(ArithmeticError):
    """A computed quantity overflowed or is NaN."""


class InvalidSpec(ValueError):
    """An experiment specification is malformed; the message states why."""
