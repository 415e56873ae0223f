"""The EWPS(λ, α, θ; C) distribution: density, cdf, hazard, quantiles, moments, sampling."""
import logging
import math

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.special import gammaln

from ewps.errors import DomainError, HazardOverflowError
from ewps.schemas.params import EwpsParams, WeibullParams
from ewps.schemas.series import FamilyTag, PowerSeriesSpec
from ewps.services.power_series import (
    THETA_ZERO,
    ArrayLike,
    _derivative,
    _scalar_or_array,
    log_coefficient,
    parallel_map,
    ps_sample_many,
    series_inverse,
)

logger = logging.getLogger(__name__)

_SERIES_RTOL = 1e-15
# largest |term| / |sum| accepted from an alternating series
_CANCELLATION_LIMIT = 1e8
_MAX_SERIES_TERMS = 1_000_000


def is_weibull(theta: float) -> bool:
    """θ close enough to 0 to use the exact Weibull branch."""
    return abs(theta) < THETA_ZERO


def _positive(y: ArrayLike, allow_zero: bool = False) -> NDArray[np.float64]:
    arr = np.asarray(y, dtype=float)
    bad = (arr < 0) if allow_zero else (arr <= 0)
    if np.any(bad) or np.any(np.isnan(arr)):
        kind = "non-negative" if allow_zero else "positive"
        raise DomainError(f"y must be {kind}")
    return arr


def _log_w(lam: float, alpha: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
    # log W = α (log y - log λ); W itself is formed as exp(log W) to avoid overflow in (y/λ)^α
    with np.errstate(divide="ignore"):
        return alpha * (np.log(y) - math.log(lam))


def _log_c_over_theta(spec: PowerSeriesSpec, theta: float) -> float:
    return math.log(float(_derivative(spec, np.float64(theta), 0)) / theta)


# ---------------------------------------------------------------------------
# Weibull baseline
# ---------------------------------------------------------------------------


def weibull_pdf(p: WeibullParams, y: ArrayLike) -> ArrayLike:
    arr = _positive(y)
    log_w = _log_w(p.lam, p.alpha, arr)
    out = np.exp(math.log(p.alpha) + log_w - np.log(arr) - np.exp(log_w))
    return _scalar_or_array(out, y)


def weibull_survival(p: WeibullParams, y: ArrayLike) -> ArrayLike:
    arr = _positive(y, allow_zero=True)
    return _scalar_or_array(np.exp(-np.exp(_log_w(p.lam, p.alpha, arr))), y)


def weibull_hazard(p: WeibullParams, y: ArrayLike) -> ArrayLike:
    """r_0(y) = α λ^-α y^(α-1)."""
    arr = _positive(y)
    return _scalar_or_array(p.alpha * np.exp(_log_w(p.lam, p.alpha, arr)) / arr, y)


# ---------------------------------------------------------------------------
# EWPS
# ---------------------------------------------------------------------------


def density(p: EwpsParams, y: ArrayLike, log_scale: bool = False) -> ArrayLike:
    """f(y) = θ g(y) C'(θ S(y)) / C(θ); the Weibull pdf when θ = 0."""
    arr = _positive(y)
    log_w = _log_w(p.lam, p.alpha, arr)
    w = np.exp(log_w)
    log_f = math.log(p.alpha) + log_w - np.log(arr) - w
    if not is_weibull(p.theta):
        z = p.theta * np.exp(-w)
        # C'(z) > 0 on the whole domain and C(θ)/θ > 0, so both logs are real
        log_f = log_f + np.log(_derivative(p.spec, z, 1)) - _log_c_over_theta(p.spec, p.theta)
    out = log_f if log_scale else np.exp(log_f)
    return _scalar_or_array(out, y)


def survival(p: EwpsParams, y: ArrayLike) -> ArrayLike:
    """1 - F(y), computed as C(θ S) / C(θ) to keep precision in the far tail."""
    arr = _positive(y, allow_zero=True)
    s = np.exp(-np.exp(_log_w(p.lam, p.alpha, arr)))
    if is_weibull(p.theta):
        return _scalar_or_array(s, y)
    c_theta = float(_derivative(p.spec, np.float64(p.theta), 0))
    out = _derivative(p.spec, p.theta * s, 0) / c_theta
    return _scalar_or_array(out, y)


def cdf(p: EwpsParams, y: ArrayLike) -> ArrayLike:
    """F(y) = 1 - C(θ S(y)) / C(θ)."""
    return _scalar_or_array(1.0 - np.asarray(survival(p, y)), y)


def hazard(p: EwpsParams, y: ArrayLike) -> ArrayLike:
    """r(y) = r_0(y) · z C'(z) / C(z) with z = θ S(y); r_0 when θ = 0."""
    arr = _positive(y)
    log_w = _log_w(p.lam, p.alpha, arr)
    w = np.exp(log_w)
    s = np.exp(-w)
    if np.any(s == 0.0):
        raise HazardOverflowError("survival underflowed to zero; hazard is not representable")
    base = p.alpha * w / arr
    if is_weibull(p.theta):
        return _scalar_or_array(base, y)
    z = p.theta * s
    ratio = z * _derivative(p.spec, z, 1) / _derivative(p.spec, z, 0)
    return _scalar_or_array(base * ratio, y)


def _check_probability(xi: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(xi, dtype=float)
    if np.any(~(arr > 0)) or np.any(~(arr < 1)):
        raise DomainError("probability must lie strictly between 0 and 1")
    return arr


def quantile_factor(spec: PowerSeriesSpec, theta: float, xi: ArrayLike) -> ArrayLike:
    """B_ξ(θ) = -log(C^-1((1-ξ) C(θ)) / θ); -log(1-ξ) at θ = 0."""
    arr = _check_probability(xi)
    if is_weibull(theta):
        return _scalar_or_array(-np.log1p(-arr), xi)
    c_theta = float(_derivative(spec, np.float64(theta), 0))
    root = np.asarray(series_inverse(spec, (1.0 - arr) * c_theta), dtype=float)
    out = -np.log1p((root - theta) / theta)
    return _scalar_or_array(out, xi)


def quantile(p: EwpsParams, xi: ArrayLike) -> ArrayLike:
    """q_ξ = λ B_ξ(θ)^(1/α)."""
    b = np.asarray(quantile_factor(p.spec, p.theta, xi), dtype=float)
    return _scalar_or_array(p.lam * b ** (1.0 / p.alpha), xi)


def quantile_ratio(p: EwpsParams, xi: float, xi_other: float) -> float:
    """q_ξ / q_ξ' = (B_ξ / B_ξ')^(1/α), free of λ."""
    b = quantile_factor(p.spec, p.theta, xi)
    b_other = quantile_factor(p.spec, p.theta, xi_other)
    return float((b / b_other) ** (1.0 / p.alpha))


def _settled(total: float, peak: float) -> float | None:
    if peak > _CANCELLATION_LIMIT * abs(total):
        return None
    return total


def _weighted_series(spec: PowerSeriesSpec, theta: float, power: float) -> float | None:
    """Σ a_n θ^n n^-power; None if it has not settled within the term cap or cancels too heavily."""
    log_abs = math.log(abs(theta))
    sign = -1.0 if theta < 0 else 1.0
    if spec.tag == FamilyTag.BINOMIAL:
        n = np.arange(1, spec.m + 1, dtype=float)
        terms = np.exp(log_coefficient(spec, n) + n * log_abs - power * np.log(n)) * sign**n
        return _settled(float(np.sum(terms)), float(np.max(np.abs(terms))))
    total = 0.0
    peak = 0.0
    start, chunk = 1, 256
    while start <= _MAX_SERIES_TERMS:
        n = np.arange(start, start + chunk, dtype=float)
        mags = np.exp(log_coefficient(spec, n) + n * log_abs - power * np.log(n))
        terms = np.where(np.mod(n, 2.0) == 1.0, sign, 1.0) * mags
        total = total + float(np.sum(terms))
        peak = max(peak, float(np.max(mags)))
        tail = float(np.max(mags[-2:]))
        if tail <= _SERIES_RTOL * abs(total) and mags[-1] <= mags[0]:
            return _settled(total, peak)
        start += chunk
        chunk *= 2
    return None


def moment(p: EwpsParams, r: float) -> float:
    """E(Y^r) from the Weibull-mixture series; quadrature where the series diverges or cancels."""
    if not r > 0:
        raise DomainError(f"moment order must be positive, got {r}")
    base = math.exp(gammaln(r / p.alpha + 1.0) + r * math.log(p.lam))
    if is_weibull(p.theta):
        return base
    series = None
    if abs(p.theta) < p.spec.s:
        series = _weighted_series(p.spec, p.theta, r / p.alpha)
    if series is None:
        logger.debug("moment series unavailable for %s at theta=%s; using quadrature", p.spec, p.theta)
        return _moment_by_quadrature(p, r)
    c_theta = float(_derivative(p.spec, np.float64(p.theta), 0))
    return base * series / c_theta


def _moment_by_quadrature(p: EwpsParams, r: float) -> float:
    def integrand(y: float) -> float:
        return r * y ** (r - 1.0) * survival(p, y)

    head, _ = quad(integrand, 0.0, p.lam, limit=200)
    tail, _ = quad(integrand, p.lam, math.inf, limit=200)
    return head + tail


def mixture_density(p: EwpsParams, y: ArrayLike, K: int) -> ArrayLike:
    """Truncated expansion Σ_{n<=K} [a_n θ^n / C(θ)] g(y; λ n^(-1/α), α)."""
    if K < 1:
        raise DomainError(f"truncation order must be >= 1, got {K}")
    if is_weibull(p.theta):
        raise DomainError("the mixture expansion needs theta != 0")
    if abs(p.theta) >= p.spec.s:
        raise DomainError(f"the mixture expansion diverges for |theta| >= {p.spec.s}")
    arr = _positive(y)
    w = np.exp(_log_w(p.lam, p.alpha, arr))
    n = np.arange(1, K + 1, dtype=float)
    sign = np.where((p.theta < 0) & (np.mod(n, 2.0) == 1.0), -1.0, 1.0)
    with np.errstate(over="ignore"):
        weights = sign * np.exp(log_coefficient(p.spec, n) + n * math.log(abs(p.theta)))
    weights = weights / float(_derivative(p.spec, np.float64(p.theta), 0))
    # g(y; λ n^(-1/α), α) = n α W exp(-n W) / y
    comps = n[None, :] * p.alpha * w[:, None] * np.exp(-np.outer(w, n)) / arr[:, None]
    out = comps @ weights
    return _scalar_or_array(out.reshape(arr.shape), y)


def _uniforms(rng: np.random.Generator, n: int) -> NDArray[np.float64]:
    u = rng.random(n)
    u[u == 0.0] = np.nextafter(0.0, 1.0)
    return u


def sample(p: EwpsParams, n: int, seed: int) -> NDArray[np.float64]:
    """n iid draws by inverse cdf, deterministic per seed."""
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return np.asarray(quantile(p, _uniforms(rng, n)), dtype=float)


def sample_compositional(p: EwpsParams, n: int, seed: int) -> NDArray[np.float64]:
    """Draws from the physical construction: min (θ > 0) or max (θ < 0) of N Weibull lifetimes."""
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    if is_weibull(p.theta):
        raise DomainError("compositional sampling needs theta != 0")
    rng = np.random.default_rng(seed)
    if p.theta > 0:
        count_theta, reducer = p.theta, np.minimum
    else:
        count_theta, reducer = parallel_map(p.spec, p.theta), np.maximum
    counts = ps_sample_many(p.spec, count_theta, n, rng)
    lifetimes = p.lam * rng.weibull(p.alpha, size=int(counts.sum()))
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return reducer.reduceat(lifetimes, offsets)
