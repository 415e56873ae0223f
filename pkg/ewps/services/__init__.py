"""Numerical services: power series, distribution, likelihood, fitting, diagnostics, simulation."""
from ewps.services.diagnostics import ad_normality, qq_pairs, quantile_residuals
from ewps.services.ewps_dist import cdf, density, hazard, moment, quantile, sample, sample_compositional, survival
from ewps.services.fit import compare_models, fit_mle, fit_weibull, lr_test, profile_theta, quantile_fit
from ewps.services.likelihood import loglik, observed_info, score
from ewps.services.simulation import simulate_regression

__all__ = [
    "ad_normality",
    "cdf",
    "compare_models",
    "density",
    "fit_mle",
    "fit_weibull",
    "hazard",
    "loglik",
    "lr_test",
    "moment",
    "observed_info",
    "profile_theta",
    "qq_pairs",
    "quantile",
    "quantile_fit",
    "quantile_residuals",
    "sample",
    "sample_compositional",
    "score",
    "simulate_regression",
    "survival",
]
