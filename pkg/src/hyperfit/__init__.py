"""Hyperinflation price-index modelling and crash-date estimation.

The package fits three nested models of the log price index p(t) = ln P(t):

* linear (steady exponential inflation, constant growth rate),
* double-exponential (exponentially accelerating growth rate),
* finite-time singularity (power-law accelerating growth rate that
  diverges at a critical date t_c).

It also propagates an assumed relative measurement error on the
per-period inflation rates into parameter uncertainties by Monte Carlo
resampling, and ships a CLI (``hyperfit``) that ties ingestion, fitting,
resampling, and curve export together.
"""

__version__ = "1.0.0"

from .series import (
    Epoch,
    InflationSeries,
    PriceIndexSeries,
    build_price_index,
    growth_rates,
    load_series,
)
from .models import (
    LinearParams,
    DoubleExpParams,
    SingularityParams,
    RegimeTwoParams,
    RecursionParams,
    eval_linear,
    eval_double_exp,
    eval_singularity,
    eval_regime_two,
    growth_rate_curve,
    alpha_to_gamma,
    gamma_to_alpha,
    ab_coefficients,
    doubling_time,
    doubling_time_from_ab,
    critical_time,
    simulate_recursion,
)
from .fitting import FitConfig, FitResult, fit_linear, fit_double_exp, fit_singularity, predict
from .montecarlo import MCConfig, MCReport, sample_generation, run_mc, sweep_error

__all__ = [
    "Epoch",
    "InflationSeries",
    "PriceIndexSeries",
    "build_price_index",
    "growth_rates",
    "load_series",
    "LinearParams",
    "DoubleExpParams",
    "SingularityParams",
    "RegimeTwoParams",
    "RecursionParams",
    "eval_linear",
    "eval_double_exp",
    "eval_singularity",
    "eval_regime_two",
    "growth_rate_curve",
    "alpha_to_gamma",
    "gamma_to_alpha",
    "ab_coefficients",
    "doubling_time",
    "doubling_time_from_ab",
    "critical_time",
    "simulate_recursion",
    "FitConfig",
    "FitResult",
    "fit_linear",
    "fit_double_exp",
    "fit_singularity",
    "predict",
    "MCConfig",
    "MCReport",
    "sample_generation",
    "run_mc",
    "sweep_error",
]
