"""Simulation, estimation and forecasting for iterated fractional Ornstein-Uhlenbeck processes."""

from .errors import (
    ExperimentUnstable,
    FouError,
    NumericalError,
    ValidationError,
)
from .estimate import FitConfig, FitReport, WhittleConfig, estimate_H, estimate_lambda_plugin, estimate_sigma, fit
from .fbm import FgnGrid, fgn_autocovariance, simulate_fbm, simulate_fgn
from .filters import Filter, binomial_filter, daubechies2_filter, dilate, quadratic_variation
from .forecast import ForecastTask, durbin_levinson, mae, naive_predictions, one_step_predictions
from .model import (
    FouSpec,
    autocovariance,
    g_closed_form,
    g_quadrature_oracle,
    spectral_density,
    spectral_integral_variance,
    stationary_variance,
)
from .montecarlo import McConfig, McReport, cvm_normality_pvalue, run_experiment, table_emit
from .series import Path
from .simulate import SimulationPlan, path_standardize, simulate_fou

__version__ = "0.1.0"

__all__ = [
    "ExperimentUnstable",
    "FouError",
    "NumericalError",
    "ValidationError",
    "FitConfig",
    "FitReport",
    "WhittleConfig",
    "estimate_H",
    "estimate_lambda_plugin",
    "estimate_sigma",
    "fit",
    "FgnGrid",
    "fgn_autocovariance",
    "simulate_fbm",
    "simulate_fgn",
    "Filter",
    "binomial_filter",
    "daubechies2_filter",
    "dilate",
    "quadratic_variation",
    "ForecastTask",
    "durbin_levinson",
    "mae",
    "naive_predictions",
    "one_step_predictions",
    "FouSpec",
    "autocovariance",
    "g_closed_form",
    "g_quadrature_oracle",
    "spectral_density",
    "spectral_integral_variance",
    "stationary_variance",
    "McConfig",
    "McReport",
    "cvm_normality_pvalue",
    "run_experiment",
    "table_emit",
    "Path",
    "SimulationPlan",
    "path_standardize",
    "simulate_fou",
]
