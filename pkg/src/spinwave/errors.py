"""Exception types shared across the package."""


class SpinwaveError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SpinwaveError):
    """Invalid or inconsistent run configuration."""


class QuadratureError(SpinwaveError):
    """A numerical quadrature failed to converge to the requested tolerance.

    The residual estimate of the last refinement is attached so callers can
    report how far the result was from converging.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IntegrationError(SpinwaveError):
    """The ODE integrator failed (for example step-size underflow)."""


class DepolarizedStateError(SpinwaveError):
    """The mean spin vanished, so the squeezing parameter is undefined."""


class BudgetExceededError(SpinwaveError):
    """A dense-solver request exceeds the configured size budget."""


class BracketError(SpinwaveError):
    """A scalar search bracket is invalid or does not contain the optimum."""
