"""Exception types shared across the package."""


class MultilookError(Exception):
    """Base class for all errors raised by this package."""


class BadShapeError(MultilookError, ValueError):
    """Operands have incompatible or invalid dimensions."""


class SingularMatrixError(MultilookError):
    """A matrix that must be inverted is singular or numerically so."""


class ConvergenceError(MultilookError):
    """An iterative routine exhausted its iteration budget."""


class DivergedError(MultilookError):
    """An iterative refinement moved away from its fixed point."""


class NonFiniteError(MultilookError):
    """A computation produced NaN or infinity."""


class CorruptFileError(MultilookError):
    """A container file fails its format checks."""


class ConfigError(MultilookError, ValueError):
    """A run configuration document is malformed."""
