"""Exception hierarchy shared by all modules."""


class RobustRiccatiError(Exception):
    """Base class for errors raised by this package."""


class StructuralError(RobustRiccatiError, ValueError):
    """Inconsistent dimensions or malformed inputs."""


class DomainError(RobustRiccatiError, ValueError):
    """A numerical argument lies outside the domain of the operation."""


class BreakdownError(DomainError):
    """The risk-sensitive update left the positive-definite cone."""


class ContractError(RobustRiccatiError, ValueError):
    """A risk parameter was paired with a covariance it was not solved against."""


class NumericError(RobustRiccatiError, ArithmeticError):
    """A matrix that must be invertible is numerically singular."""


class CertificationError(RobustRiccatiError):
    """No positive threshold keeps the distorted observability Gramian definite."""


class NonConvergenceError(RobustRiccatiError):
    """An iteration reached its step budget without meeting its tolerance."""


class ModelValidationError(RobustRiccatiError):
    """A well-formed model fails one of its structural assumptions."""
