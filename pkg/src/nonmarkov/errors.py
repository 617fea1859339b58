"""Exception types shared across the package."""


class NonMarkovError(Exception):
    """Base class for all package errors."""


class DimensionError(NonMarkovError):
    """Operator has the wrong shape for the requested operation."""


class ValidationError(NonMarkovError):
    """Input violates a structural invariant (hermiticity, completeness, ...)."""


class DomainError(NonMarkovError):
    """Numerical domain violation (e.g. log of a negative eigenvalue)."""


class CpDomainError(NonMarkovError):
    """A map was evaluated where it is not completely positive.

    Carries the offending time and the minimum Choi eigenvalue.
    """

    def __init__(self, message, t=None, min_choi_eig=None):
        super().__init__(message)
        self.t = t
        self.min_choi_eig = min_choi_eig


class NotCompletelyPositiveError(CpDomainError):
    """Kraus extraction requested for an affine map with a negative Choi."""


class IntegrationError(NonMarkovError):
    """Generator propagation hit a rate singularity; names the singular time."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class SolverError(NonMarkovError):
    """SDP solver failed to converge or detected an ill-posed problem."""

    def __init__(self, message, residuals=None, t=None):
        super().__init__(message)
        self.residuals = residuals
        self.t = t


class ConfigError(NonMarkovError):
    """Bad or incomplete scenario configuration."""
