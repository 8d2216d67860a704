"""Exception types shared across the package."""


class CovlabError(Exception):
    """Base class for all package-specific errors."""


class SingularMetric(CovlabError):
    """Metric (or other square matrix) is numerically singular."""


class WrongSignature(CovlabError):
    """Matrix is not Lorentzian: expected exactly one negative eigenvalue."""


class MissingJet(CovlabError):
    """A jet of higher order than the one provided is required."""


class DomainError(CovlabError):
    """Evaluation left the domain of an elementary function (1/0, sqrt of negative)."""


class NoConvergence(CovlabError):
    """Iterative solver failed to reach tolerance within the iteration budget."""


class SingularJacobian(CovlabError):
    """Jacobian matrix in a Newton step is numerically singular."""


class UnsupportedTheory(CovlabError):
    """Requested field theory is not in the built-in catalogue."""


class WrongCouplingOrder(CovlabError):
    """Operation requires a different metric coupling order than the theory has."""


class IndexTooHigh(CovlabError):
    """Field lift has differential index above what the flux formula supports."""


class BadDispersion(CovlabError):
    """Wave covector violates the algebraic on-shell (dispersion) constraint."""


class ValidationError(CovlabError):
    """Scenario file failed schema or dry-run validation."""


class CheckFailure(CovlabError):
    """A verification check exceeded its tolerance."""
