"""Exception hierarchy shared by every module of the package."""


class FisherIPMError(Exception):
    """Base class for all package errors."""


class ConfigError(FisherIPMError, ValueError):
    """Invalid configuration or constructor arguments."""


class ShapeMismatch(FisherIPMError, ValueError):
    pass


class NonConverged(FisherIPMError):
    """Quadrature refinement did not reach the requested tolerance."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class UnboundedIntegrand(FisherIPMError):
    """Integrand blew up (division by a vanishing density) on the grid."""


class DegenerateDistance(FisherIPMError):
    """The two distributions coincide, so the optimal critic is undefined."""


class SingularCovariance(FisherIPMError, ArithmeticError):
    pass


class NonFiniteLoss(FisherIPMError, FloatingPointError):
    """A forward pass or loss evaluation produced NaN or Inf.

    ``diagnostics`` carries whatever context the raising site had
    (iteration, last finite metrics, checkpoint path).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NonFiniteGradient(FisherIPMError, FloatingPointError):
    pass


class MalformedCsv(FisherIPMError, ValueError):
    pass
