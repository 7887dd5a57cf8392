"""Exception hierarchy shared by all darkmodes modules."""


class DarkModeError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(DarkModeError, ValueError):
    """Matrix or vector shapes are inconsistent."""


class InvalidInputError(DarkModeError, ValueError):
    """Numerically invalid input (non-finite entries, asymmetric Hamiltonian, singular transform, ...)."""


class StructureError(DarkModeError, ArithmeticError):
    """A symplectic structure that must hold analytically failed numerically."""


class InsufficientDataError(DarkModeError, ValueError):
    """The system lacks the partition or Hamiltonian summands an analysis needs."""


class NoSteadyStateError(DarkModeError, ArithmeticError):
    """The drift matrix is not Hurwitz, so no stationary covariance exists."""
