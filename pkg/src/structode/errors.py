"""Exception hierarchy shared by every module."""

from __future__ import annotations


class StructodeError(Exception):
    """Base class for library errors."""


class SingularMatrix(StructodeError):
    pass


class RankDeficient(StructodeError):
    pass


class NoConvergence(StructodeError):
    """Raised by an iteration that hit its cap.

    ``change`` is the last measured update size and ``iterations`` the
    number of sweeps performed. ``block`` is filled in by the integrator
    when it knows which block failed.
    """

    def __init__(self, message: str, change=None, iterations: int = 0, block=None):
        super().__init__(message)
        self.change = change
        self.iterations = iterations
        self.block = block


class NotInCatalog(StructodeError):
    pass


class SingularA0(StructodeError):
    pass


class DomainError(StructodeError, ArithmeticError):
    pass


class DegenerateDenominator(StructodeError):
    pass


class Infeasible(StructodeError):
    pass


class SearchExhausted(StructodeError):
    pass


class DegenerateFit(StructodeError):
    pass


class NoReference(StructodeError):
    pass


class InvalidSpec(StructodeError, ValueError):
    """User-supplied configuration rejected before any computation."""
