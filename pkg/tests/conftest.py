from pathlib import Path

import numpy as np
import pytest

from ewps.schemas.fit import FitOptions
from ewps.schemas.params import RegressionData, RegressionParams
from ewps.schemas.series import PowerSeriesSpec
from ewps.services.data_loader import load_regression_data
from ewps.services.simulation import simulate_data

FIXTURE = Path(__file__).resolve().parents[1] / "ewps" / "data" / "coconut_like.csv"
FIXTURE_COVARIATES = ["length", "log_diameter"]


def make_data(beta, alpha, theta, spec, n, seed) -> RegressionData:
    # covariates get their own stream; simulate_data draws from default_rng(seed)
    rng = np.random.default_rng([seed, 1])
    X = np.column_stack([np.ones(n), rng.uniform(0.0, 1.0, n)])
    params = RegressionParams(beta=tuple(beta), alpha=alpha, theta=theta, spec=spec)
    return simulate_data(params, X, seed, names=("intercept", "x"))


def strength_design(n, seed) -> np.ndarray:
    """Intercept, fibre length cycling through six values, log diameter from U(0.1, 0.45)."""
    rng = np.random.default_rng([seed, 1])
    lengths = np.resize([5.0, 10.0, 15.0, 20.0, 25.0, 35.0], n)
    return np.column_stack([np.ones(n), lengths, np.log(rng.uniform(0.1, 0.45, n))])


@pytest.fixture
def fast_options() -> FitOptions:
    return FitOptions(theta_grid_step=0.05, theta_refine_step=0.01)


@pytest.fixture
def fixture_path() -> Path:
    return FIXTURE


@pytest.fixture
def coconut_data() -> RegressionData:
    return load_regression_data(FIXTURE, "strength", FIXTURE_COVARIATES)


@pytest.fixture
def weibull_data() -> RegressionData:
    return make_data((1.0, 0.5), 2.0, 0.0, PowerSeriesSpec.of("poisson"), 500, seed=11)
