"""Quantile residuals, normal Q-Q pairs and the Anderson-Darling normality check."""
import logging
from typing import Sequence

import numpy as np
from scipy.stats import anderson, norm

from ewps.errors import DomainError
from ewps.schemas.diagnostics import QQPair, ResidualSet
from ewps.schemas.fit import FitResult
from ewps.schemas.params import EwpsParams, RegressionData
from ewps.services.ewps_dist import cdf
from ewps.services.likelihood import get_link

logger = logging.getLogger(__name__)

CDF_CLIP = 1e-12
AD_MIN_SIZE = 8


def fitted_cdf(fit: FitResult, data: RegressionData) -> np.ndarray:
    """F(y_i; λ̂_i, α̂, θ̂) for every observation."""
    params = fit.params
    lam = get_link(fit.link).inverse(data.X @ params.beta_array)
    # F(y; λ, α, θ) = F(y / λ; 1, α, θ)
    unit = EwpsParams(lam=1.0, alpha=params.alpha, theta=params.theta, spec=params.spec)
    return np.asarray(cdf(unit, data.y / lam), dtype=float)


def qq_pairs(residuals: Sequence[float]) -> list[QQPair]:
    """(Φ⁻¹((i - 0.5) / n), i-th smallest residual)."""
    ordered = np.sort(np.asarray(residuals, dtype=float))
    n = ordered.shape[0]
    theoretical = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return [QQPair(theoretical=float(t), observed=float(o)) for t, o in zip(theoretical, ordered)]


def _ad_p_value(statistic: float) -> float:
    if statistic < 0.2:
        p = 1.0 - np.exp(-13.436 + 101.14 * statistic - 223.73 * statistic**2)
    elif statistic < 0.34:
        p = 1.0 - np.exp(-8.318 + 42.796 * statistic - 59.938 * statistic**2)
    elif statistic < 0.6:
        p = np.exp(0.9177 - 4.279 * statistic - 1.38 * statistic**2)
    else:
        p = np.exp(1.2937 - 5.709 * statistic + 0.0186 * statistic**2)
    return float(np.clip(p, 0.0, 1.0))


def ad_normality(residuals: Sequence[float]) -> tuple[float, float]:
    """Anderson-Darling statistic with estimated mean and variance, small-sample adjusted, and its p-value."""
    values = np.asarray(residuals, dtype=float)
    n = values.shape[0]
    if n < AD_MIN_SIZE:
        raise DomainError(f"Anderson-Darling needs at least {AD_MIN_SIZE} values, got {n}")
    if not np.all(np.isfinite(values)):
        raise DomainError("residuals must be finite")
    if np.std(values) == 0.0:
        raise DomainError("residuals have zero variance")
    raw = float(anderson(values, dist="norm").statistic)
    statistic = raw * (1.0 + 0.75 / n + 2.25 / n**2)
    return statistic, _ad_p_value(statistic)


def quantile_residuals(fit: FitResult, data: RegressionData) -> ResidualSet:
    """Q_i = Φ⁻¹(F(y_i; λ̂_i, α̂, θ̂)) with cdf values clipped to [1e-12, 1 - 1e-12].

    The Anderson-Darling fields are left empty for fewer than ``AD_MIN_SIZE`` residuals.
    """
    if data.k != fit.params.k:
        raise DomainError(f"data has {data.k} covariates but the fit has {fit.params.k}")
    if not fit.converged:
        logger.warning("computing residuals for a fit that did not converge")
    values = fitted_cdf(fit, data)
    clipped = (values < CDF_CLIP) | (values > 1.0 - CDF_CLIP)
    if np.any(clipped):
        logger.warning("%d cdf values clipped before the normal inverse", int(np.sum(clipped)))
    residuals = norm.ppf(np.clip(values, CDF_CLIP, 1.0 - CDF_CLIP))
    statistic = p_value = None
    if residuals.shape[0] >= AD_MIN_SIZE:
        statistic, p_value = ad_normality(residuals)
    else:
        logger.info("Anderson-Darling skipped: %d residuals, need %d", residuals.shape[0], AD_MIN_SIZE)
    return ResidualSet(
        residuals=residuals.tolist(),
        cdf_values=values.tolist(),
        clipped=clipped.tolist(),
        qq_pairs=qq_pairs(residuals),
        ad_statistic=statistic,
        ad_p_value=p_value,
    )
