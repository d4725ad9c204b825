"""Histogram transform ensembles for nonparametric density estimation.

Randomized affine transforms (rotation, log-uniform stretching,
translation) induce histogram partitions; averaging many of them yields
smooth, fast density estimates.  The package ships the fixed-bin
estimator, an adaptive splitting variant, a Gaussian KDE baseline,
analytic benchmark densities, evaluation metrics, a real-data pipeline,
and an experiment CLI.
"""

from .adaptive_estimator import AdaptiveTree, RotatedTreeMember, fit_adaptive, fit_ahte, select_split
from .baselines import KdeModel, fit_kde
from .errors import ConfigError, DataError, HteError
from .grid_estimator import EnsembleModel, GridEstimator, fit_ensemble
from .metrics import EPSILON, EvalReport, anll, eval_report, fit_power_law, mae, rate_slope
from .synth import DensitySpec, make_type
from .transform import (
    HistogramTransform,
    StretchConfig,
    reference_scale,
    sample_rotation,
    sample_stretch,
    sample_translation,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveTree",
    "ConfigError",
    "DataError",
    "DensitySpec",
    "EPSILON",
    "EnsembleModel",
    "EvalReport",
    "GridEstimator",
    "HistogramTransform",
    "HteError",
    "KdeModel",
    "RotatedTreeMember",
    "StretchConfig",
    "anll",
    "eval_report",
    "fit_adaptive",
    "fit_ahte",
    "fit_ensemble",
    "fit_kde",
    "fit_power_law",
    "mae",
    "make_type",
    "rate_slope",
    "reference_scale",
    "sample_rotation",
    "sample_stretch",
    "sample_translation",
    "select_split",
    "__version__",
]
