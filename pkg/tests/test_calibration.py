"""Replicate studies: Wald coverage of EWG fits and the null likelihood-ratio law."""
import numpy as np
import pytest
from scipy.stats import chi2

from ewps.errors import EwpsError
from ewps.schemas.fit import FitOptions
from ewps.schemas.params import RegressionParams
from ewps.schemas.series import PowerSeriesSpec
from ewps.services.fit import fit_mle, fit_weibull, lr_test, wald_intervals
from ewps.services.simulation import simulate_data

from tests.conftest import strength_design

pytestmark = pytest.mark.slow

GEOMETRIC = PowerSeriesSpec.of("geometric")
OPTIONS = FitOptions(theta_grid_step=0.05, theta_refine_step=0.005)
NAMES = ("intercept", "length", "log_diameter")
REPLICATES = 200
N = 300


def test_wald_coverage():
    truth = RegressionParams(beta=(0.1, -0.011, -0.59), alpha=5.05, theta=0.9455, spec=GEOMETRIC)
    hits = np.zeros(5)
    used = 0
    for rep in range(REPLICATES):
        data = simulate_data(truth, strength_design(N, seed=rep), seed=rep, names=NAMES)
        try:
            fit = fit_mle(data, GEOMETRIC, OPTIONS)
        except EwpsError:
            continue
        if not fit.converged:
            continue
        used += 1
        hits += [low <= value <= high for (_, low, high), value in zip(wald_intervals(fit), truth.as_vector())]
    assert used >= 0.8 * REPLICATES
    coverage = hits / used
    assert np.all((coverage >= 0.90) & (coverage <= 0.99)), coverage


def test_null_likelihood_ratio():
    truth = RegressionParams(beta=(0.1, -0.011, -0.59), alpha=3.26, theta=0.0, spec=GEOMETRIC)
    statistics = []
    for rep in range(REPLICATES):
        data = simulate_data(truth, strength_design(N, seed=10_000 + rep), seed=10_000 + rep, names=NAMES)
        try:
            null = fit_weibull(data, OPTIONS)
            statistics.append(lr_test(fit_mle(data, GEOMETRIC, OPTIONS), null.loglik)[0])
        except EwpsError:
            continue
    values = np.asarray(statistics)
    assert values.size >= 0.9 * REPLICATES
    assert 0.7 <= values.mean() <= 1.4
    assert 0.02 <= np.mean(values > chi2.ppf(0.95, 1)) <= 0.09
