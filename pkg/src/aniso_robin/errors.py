"""Exception types shared by every module."""


class InputError(ValueError):
    """Malformed or out-of-range input."""


class DomainError(ValueError):
    """Operation is undefined at the given point (e.g. a gradient at the origin)."""


class UnsupportedError(ValueError):
    """The input is valid in general but outside what an operation supports."""


class NumericError(RuntimeError):
    """An iterative procedure failed; ``residual`` records how far it got."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
