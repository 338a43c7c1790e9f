"""Exception types raised by the numerical routines."""


class DynamicsError(Exception):
    """Base class for every error raised by this package."""


class PoleError(DynamicsError, ZeroDivisionError):
    """A Möbius denominator (1 + k t, or 1 - z) vanished."""


class OrbitOverflow(DynamicsError, OverflowError):
    """An iterate left the finite double range.

    ``index`` is the number of map applications completed before the
    non-finite value appeared (``None`` when not tied to an orbit).
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DomainError(DynamicsError, ValueError):
    """Input lies outside the region where the operation is defined."""


class PrecondError(DynamicsError, ValueError):
    """A structural precondition (specialness, x0 certificate, ...) failed."""


class SearchFailure(DynamicsError):
    """No admissible chart radius was found."""


class NoConvergence(DynamicsError):
    """An iterative limit did not reach the requested accuracy."""


class InsufficientData(DynamicsError):
    """Too few usable samples for a fit."""


class NewtonFailure(DynamicsError):
    """A Newton solve did not reach its residual target."""


class NoRootFound(DynamicsError):
    """Root search exhausted its budget.  ``best`` holds the best point seen."""

    def __init__(self, message, best=None, best_residual=None):
        super().__init__(message)
        self.best = best
        self.best_residual = best_residual
