"""Latent-space estimation for multi-index models via Stein score identities."""

from .distributions import DistributionSpec, Kind, log_density, sample
from .estimators import (
    LatentBasis,
    SemiSupervisedData,
    first_order_fit,
    pca_fit,
    rrr_fit,
    second_order_fit,
    semi_first_order_fit,
    semi_second_order_fit,
)
from .exceptions import (
    ConfigError,
    InvalidDimensionError,
    InvalidRankError,
    NearZeroMatrixError,
    NumericalError,
    ParameterError,
    SteinLatentError,
)
from .metrics import nrse, pmse, ssim, subspace_dist
from .scores import ScoreField, plugin_gaussian_field
from .simulation import SimulationConfig, simulate

__all__ = [
    "ConfigError", "DistributionSpec", "InvalidDimensionError", "InvalidRankError", "Kind",
    "LatentBasis", "NearZeroMatrixError", "NumericalError", "ParameterError", "ScoreField",
    "SemiSupervisedData", "SimulationConfig", "SteinLatentError", "first_order_fit",
    "log_density", "nrse", "pca_fit", "plugin_gaussian_field", "pmse", "rrr_fit", "sample",
    "second_order_fit", "semi_first_order_fit", "semi_second_order_fit", "simulate", "ssim",
    "subspace_dist",
]

__version__ = "0.1.0"
