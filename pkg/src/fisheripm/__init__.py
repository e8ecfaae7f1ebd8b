"""Fisher IPM: chi-squared oracle, augmented-Lagrangian critics and toy GAN/SSL training."""

__version__ = "0.1.0"

from .distributions import (Gaussian, GaussianMixture, LabeledMixture, Mixture, Ring,  # noqa: E402
                            UniformBox, shifted_gaussians, three_class_mixture)
from .errors import (ConfigError, DegenerateDistance, FisherIPMError, MalformedCsv,  # noqa: E402
                     NonConverged, NonFiniteGradient, NonFiniteLoss, ShapeMismatch,
                     SingularCovariance, UnboundedIntegrand)
from .estimators import FisherGAN, FisherIPM, FisherSSLClassifier  # noqa: E402
from .fisher import TrainConfig, estimate_ipm, fit_critic, train_gan  # noqa: E402
from .oracle import (QuadratureConfig, chi2_distance, chi2_monte_carlo,  # noqa: E402
                     linear_fisher_ipm, optimal_critic)
from .ssl import SslConfig, train_ssl  # noqa: E402

__all__ = [
    "Gaussian", "GaussianMixture", "LabeledMixture", "Mixture", "Ring", "UniformBox",
    "shifted_gaussians", "three_class_mixture",
    "ConfigError", "DegenerateDistance", "FisherIPMError", "MalformedCsv", "NonConverged",
    "NonFiniteGradient", "NonFiniteLoss", "ShapeMismatch", "SingularCovariance",
    "UnboundedIntegrand",
    "FisherGAN", "FisherIPM", "FisherSSLClassifier",
    "TrainConfig", "estimate_ipm", "fit_critic", "train_gan",
    "QuadratureConfig", "chi2_distance", "chi2_monte_carlo", "linear_fisher_ipm", "optimal_critic",
    "SslConfig", "train_ssl",
]
