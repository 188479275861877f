"""Exception and warning types shared across the package."""


class EcdError(Exception):
    """Base class for all package errors."""


class AssumptionViolation(EcdError):
    """The landscape breaks positivity, the two-well structure or the tail condition."""


class DomainError(EcdError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class QuadratureError(EcdError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SolverError(EcdError):
    """The tridiagonal eigensolver did not converge."""


class ResolutionError(EcdError):
    """A wavepacket is too narrow for the spatial grid."""


class NoHits(EcdError):
    """Every Monte Carlo trajectory timed out before reaching the target."""


class NoDetection(EcdError):
    """The averaged detection probability underflows on the whole time bracket."""


class ConfigError(EcdError):
    """Invalid run configuration; carries one message per offending key."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class IntegrationWarning(UserWarning):
    """Energy drift of the raw ODE integrator exceeded its budget."""
