"""Regression-structured simulation."""
import logging
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ewps.errors import DomainError
from ewps.schemas.params import EwpsParams, RegressionData, RegressionParams
from ewps.schemas.series import PowerSeriesSpec
from ewps.services.ewps_dist import _uniforms, quantile, sample_compositional
from ewps.services.likelihood import get_link

logger = logging.getLogger(__name__)


def simulate_regression(
    beta: Sequence[float],
    alpha: float,
    theta: float,
    spec: PowerSeriesSpec,
    X,
    seed: int,
    link: str = "log",
    compositional: bool = False,
) -> NDArray[np.float64]:
    """One response per row of X from EWPS(h⁻¹(x_iᵀβ), α, θ)."""
    design = np.asarray(X, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    params = RegressionParams(beta=tuple(float(b) for b in beta), alpha=alpha, theta=theta, spec=spec)
    if design.shape[1] != params.k:
        raise DomainError(f"X has {design.shape[1]} columns but beta has {params.k} entries")
    lam = get_link(link).inverse(design @ params.beta_array)
    unit = EwpsParams(lam=1.0, alpha=alpha, theta=theta, spec=spec)
    n = design.shape[0]
    if compositional:
        draws = sample_compositional(unit, n, seed)
    else:
        draws = np.asarray(quantile(unit, _uniforms(np.random.default_rng(seed), n)), dtype=float)
    logger.debug("simulated %d responses from %s", n, spec)
    return lam * draws


def simulate_data(
    params: RegressionParams,
    X,
    seed: int,
    link: str = "log",
    names: Sequence[str] = (),
) -> RegressionData:
    y = simulate_regression(params.beta, params.alpha, params.theta, params.spec, X, seed, link=link)
    return RegressionData(y=y, X=X, link=link, covariate_names=tuple(names))
