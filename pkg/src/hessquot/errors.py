"""Exception types shared across the package."""


class HessquotError(Exception):
    """Base class for all package-specific failures."""


class DomainError(HessquotError, ValueError):
    """Malformed or out-of-range input (bad order k, bad index, bad grid)."""


class ConeViolationError(HessquotError):
    """An eigenvalue vector or Hessian left the required Garding cone."""


class DegenerateSpectrumError(HessquotError):
    """A spectrum too close to isotropic for a ratio to be well defined."""


class DegenerateConstraintsError(HessquotError):
    """Constraint data whose reduced system is numerically singular."""


class LinearSolveError(HessquotError):
    """An inner linear solve failed to meet its residual contract."""
