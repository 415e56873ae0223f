"""Power series functions C(θ) of the six supported families.

Covers coefficients, closed-form derivatives up to order 4, inverses, the
θ-domain, the zero-truncated discrete law and the parallel-system map t(θ).
"""
import logging
import math
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq
from scipy.special import gammaln

from ewps.errors import DomainError, SamplingError, UnsupportedCharacterizationError
from ewps.schemas.series import FamilyTag, PowerSeriesSpec

logger = logging.getLogger(__name__)

ArrayLike = Union[float, NDArray[np.float64]]

# |θ| below this is treated as θ = 0 by the distribution functions
THETA_ZERO = 1e-8
# θ closer than this to a finite domain endpoint is rejected
ENDPOINT_TOL = 1e-8
# below this |θ| the log-ratio Q(θ) is evaluated from its Taylor series
SERIES_SWITCH = 1e-3
# cumulative probability at which the sampler table stops
SAMPLER_CAP = 1.0 - 1e-14
_MAX_PF_TERMS = 1_000_000
_RTOL = 4 * np.finfo(float).eps

PARALLEL_FAMILIES = frozenset({FamilyTag.POISSON, FamilyTag.GEOMETRIC, FamilyTag.LOGARITHMIC})


def _scalar_or_array(value: NDArray[np.float64], like) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(value)
    return value


def theta_domain(spec: PowerSeriesSpec) -> tuple[float, float]:
    """Open θ interval (s*, s), or (-inf, s) on the extended domain."""
    return spec.s_star, spec.s


def check_theta(spec: PowerSeriesSpec, theta: float) -> float:
    """Validate θ against the open domain, keeping away from finite endpoints."""
    theta = float(theta)
    lower, upper = theta_domain(spec)
    if not math.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta}")
    if theta <= lower + ENDPOINT_TOL or theta >= upper - ENDPOINT_TOL:
        raise DomainError(f"theta={theta} outside the open domain ({lower}, {upper}) of {spec}")
    return theta


def log_coefficient(spec: PowerSeriesSpec, n) -> ArrayLike:
    """log a_n, with -inf where a_n = 0. Accepts an int or an integer array."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 1):
        raise DomainError("coefficient index must be >= 1")
    tag, m = spec.tag, spec.m
    with np.errstate(divide="ignore"):
        if tag == FamilyTag.POISSON:
            out = -gammaln(n_arr + 1.0)
        elif tag == FamilyTag.LOGARITHMIC:
            out = -np.log(n_arr)
        elif tag == FamilyTag.GEOMETRIC:
            out = np.zeros_like(n_arr)
        elif tag == FamilyTag.BINOMIAL:
            inside = n_arr <= m
            k = np.where(inside, n_arr, 0.0)
            out = np.where(inside, gammaln(m + 1.0) - gammaln(k + 1.0) - gammaln(m - k + 1.0), -np.inf)
        elif tag == FamilyTag.NEGATIVE_BINOMIAL:
            out = gammaln(m + n_arr - 1.0) - gammaln(n_arr) - gammaln(float(m))
        else:
            odd = np.mod(n_arr, 2.0) == 1.0
            out = np.where(odd, math.log(2.0) - np.log(n_arr), -np.inf)
    return _scalar_or_array(out, n)


def coefficient(spec: PowerSeriesSpec, n: int) -> float:
    """a_n of the family; zero beyond m for Binomial."""
    if int(n) != n:
        raise DomainError(f"coefficient index must be an integer, got {n}")
    return float(np.exp(log_coefficient(spec, int(n))))


def _rising(m: int, j: int) -> float:
    return math.prod(range(m, m + j)) if j > 0 else 1.0


def _derivative(spec: PowerSeriesSpec, z: NDArray[np.float64], order: int) -> NDArray[np.float64]:
    """d^order C / dz^order without domain checks; callers guarantee z is interior."""
    tag, m = spec.tag, spec.m
    if tag == FamilyTag.POISSON:
        return np.expm1(z) if order == 0 else np.exp(z)
    if tag == FamilyTag.LOGARITHMIC:
        if order == 0:
            return -np.log1p(-z)
        return math.factorial(order - 1) / (1.0 - z) ** order
    if tag == FamilyTag.GEOMETRIC:
        if order == 0:
            return z / (1.0 - z)
        return math.factorial(order) / (1.0 - z) ** (order + 1)
    if tag == FamilyTag.BINOMIAL:
        if order == 0:
            return np.expm1(m * np.log1p(z))
        if order > m:
            return np.zeros_like(z)
        return math.perm(m, order) * (1.0 + z) ** (m - order)
    if tag == FamilyTag.NEGATIVE_BINOMIAL:
        # C = z u with u = (1-z)^-m, so C^(k) = z u^(k) + k u^(k-1)
        u_k = _rising(m, order) * (1.0 - z) ** (-m - order)
        if order == 0:
            return z * u_k
        u_prev = _rising(m, order - 1) * (1.0 - z) ** (-m - order + 1)
        return z * u_k + order * u_prev
    # logarithmic II: C = log(1+z) - log(1-z)
    if order == 0:
        return np.log1p(z) - np.log1p(-z)
    f = math.factorial(order - 1)
    return f * ((-1.0) ** (order - 1) * (1.0 + z) ** (-order) + (1.0 - z) ** (-order))


def series_value(spec: PowerSeriesSpec, theta: ArrayLike, order: int = 0) -> ArrayLike:
    """C^(order)(θ) for order in 0..4; θ may be a scalar or an array."""
    if order not in range(5):
        raise DomainError(f"derivative order must be in 0..4, got {order}")
    t = np.asarray(theta, dtype=float)
    lower, upper = theta_domain(spec)
    if np.any(~np.isfinite(t)) or np.any(t <= lower + ENDPOINT_TOL) or np.any(t >= upper - ENDPOINT_TOL):
        raise DomainError(f"theta outside the open domain ({lower}, {upper}) of {spec}")
    return _scalar_or_array(_derivative(spec, t, order), theta)


def series_image(spec: PowerSeriesSpec) -> tuple[float, float]:
    """Image of C over the open θ-domain; C is increasing there."""
    tag = spec.tag
    if tag in (FamilyTag.POISSON, FamilyTag.BINOMIAL):
        return -1.0, math.inf
    if tag == FamilyTag.LOGARITHMIC:
        return (-math.inf if spec.extended else -math.log(2.0)), math.inf
    if tag == FamilyTag.GEOMETRIC:
        return (-1.0 if spec.extended else -0.5), math.inf
    if tag == FamilyTag.NEGATIVE_BINOMIAL:
        s_star = spec.s_star
        return s_star * (1.0 - s_star) ** (-spec.m), math.inf
    return -math.inf, math.inf


def _negative_binomial_inverse(spec: PowerSeriesSpec, u: float) -> float:
    if u == 0.0:
        return 0.0

    def residual(t: float) -> float:
        return float(_derivative(spec, np.float64(t), 0)) - u

    # grow the bracket geometrically from 0 towards the endpoint on u's side
    if u > 0:
        lo, hi = 0.0, 0.5
        for _ in range(200):
            if residual(hi) >= 0:
                break
            lo, hi = hi, 1.0 - (1.0 - hi) / 2.0
        else:
            raise DomainError(f"could not bracket C^-1({u}) for {spec}")
    else:
        s_star = spec.s_star
        lo, hi = s_star / 2.0, 0.0
        for _ in range(200):
            if residual(lo) <= 0:
                break
            hi, lo = lo, s_star + (lo - s_star) / 2.0
        else:
            raise DomainError(f"could not bracket C^-1({u}) for {spec}")
    return brentq(residual, lo, hi, xtol=1e-15, rtol=_RTOL, maxiter=500)


def series_inverse(spec: PowerSeriesSpec, u: ArrayLike) -> ArrayLike:
    """θ with C(θ) = u; closed forms except for Negative Binomial (bracketed root)."""
    values = np.asarray(u, dtype=float)
    low, high = series_image(spec)
    if np.any(~np.isfinite(values)) or np.any(values <= low) or np.any(values >= high):
        raise DomainError(f"value outside the image ({low}, {high}) of C for {spec}")
    tag = spec.tag
    if tag == FamilyTag.POISSON:
        out = np.log1p(values)
    elif tag == FamilyTag.GEOMETRIC:
        out = values / (1.0 + values)
    elif tag == FamilyTag.LOGARITHMIC:
        out = -np.expm1(-values)
    elif tag == FamilyTag.BINOMIAL:
        out = np.expm1(np.log1p(values) / spec.m)
    elif tag == FamilyTag.LOGARITHMIC_II:
        out = np.tanh(values / 2.0)
    else:
        flat = [_negative_binomial_inverse(spec, float(v)) for v in values.ravel()]
        out = np.asarray(flat, dtype=float).reshape(values.shape)
    return _scalar_or_array(out, u)


def log_ratio_derivatives(spec: PowerSeriesSpec, theta: float) -> tuple[float, float, float]:
    """Q(θ) = log(C(θ) / (a_1 θ)) and its first two derivatives.

    Q is analytic through θ = 0, so small |θ| uses the Taylor series built from
    a_1..a_7; elsewhere closed forms of C, C', C'' are used.
    """
    theta = float(theta)
    a1 = coefficient(spec, 1)
    if abs(theta) < SERIES_SWITCH:
        c = [coefficient(spec, j + 1) / a1 for j in range(1, 7)]  # c_1..c_6
        q: list[float] = []
        for k in range(1, 7):
            acc = c[k - 1] - sum(j * q[j - 1] * c[k - j - 1] for j in range(1, k)) / k
            q.append(acc)
        value = sum(q[k - 1] * theta**k for k in range(1, 7))
        first = sum(k * q[k - 1] * theta ** (k - 1) for k in range(1, 7))
        second = sum(k * (k - 1) * q[k - 1] * theta ** (k - 2) for k in range(2, 7))
        return value, first, second
    t = np.float64(theta)
    c0 = float(_derivative(spec, t, 0))
    c1 = float(_derivative(spec, t, 1))
    c2 = float(_derivative(spec, t, 2))
    value = math.log(c0 / theta) - math.log(a1)
    first = c1 / c0 - 1.0 / theta
    second = c2 / c0 - (c1 / c0) ** 2 + 1.0 / theta**2
    return value, first, second


def is_odd(spec: PowerSeriesSpec) -> bool:
    """True when C is an odd function (the non-identifiable case)."""
    return spec.tag == FamilyTag.LOGARITHMIC_II


def ps_mean(spec: PowerSeriesSpec, theta: float) -> float:
    """E(N) = θ C'(θ) / C(θ) for N ~ PS(θ; C)."""
    theta = check_theta(spec, theta)
    if theta == 0.0:
        return 1.0
    t = np.float64(theta)
    return float(theta * _derivative(spec, t, 1) / _derivative(spec, t, 0))


def _check_positive_theta(spec: PowerSeriesSpec, theta: float) -> float:
    theta = float(theta)
    if theta <= 0:
        raise DomainError(f"the power series law needs theta > 0, got {theta}")
    return check_theta(spec, theta)


def ps_pf(spec: PowerSeriesSpec, theta: float, n: int) -> float:
    """P(N = n) = a_n θ^n / C(θ) of the zero-truncated power series law."""
    theta = _check_positive_theta(spec, theta)
    if n < 1:
        raise DomainError(f"support starts at 1, got n={n}")
    log_c = math.log(float(_derivative(spec, np.float64(theta), 0)))
    return float(np.exp(log_coefficient(spec, n) + n * math.log(theta) - log_c))


def _cumulative_pf(spec: PowerSeriesSpec, theta: float) -> NDArray[np.float64]:
    log_theta = math.log(theta)
    log_c = math.log(float(_derivative(spec, np.float64(theta), 0)))
    if spec.tag == FamilyTag.BINOMIAL:
        n = np.arange(1, spec.m + 1, dtype=float)
        table = np.cumsum(np.exp(log_coefficient(spec, n) + n * log_theta - log_c))
        table[-1] = 1.0
        return table
    chunks: list[NDArray[np.float64]] = []
    total = 0.0
    start = 1
    chunk = 256
    while start <= _MAX_PF_TERMS:
        n = np.arange(start, start + chunk, dtype=float)
        probs = np.exp(log_coefficient(spec, n) + n * log_theta - log_c)
        cum = total + np.cumsum(probs)
        hit = np.searchsorted(cum, SAMPLER_CAP, side="left")
        if hit < len(cum):
            chunks.append(cum[: hit + 1])
            return np.concatenate(chunks)
        chunks.append(cum)
        total = float(cum[-1])
        start += chunk
        chunk *= 2
    raise SamplingError(f"pf table for {spec} at theta={theta} did not reach {SAMPLER_CAP}")


def ps_sample_many(spec: PowerSeriesSpec, theta: float, size: int, rng: np.random.Generator) -> NDArray[np.int64]:
    """Vectorized inverse-transform draws of N ~ PS(θ; C)."""
    theta = _check_positive_theta(spec, theta)
    table = _cumulative_pf(spec, theta)
    u = rng.random(size)
    if np.any(u > table[-1]):
        raise SamplingError("uniform draw beyond the sampler probability cap")
    return np.searchsorted(table, u, side="right").astype(np.int64) + 1


def ps_sample(spec: PowerSeriesSpec, theta: float, seed: int) -> int:
    """One draw of N ~ PS(θ; C), deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    return int(ps_sample_many(spec, theta, 1, rng)[0])


def parallel_map(spec: PowerSeriesSpec, theta: float) -> float:
    """t(θ) carrying θ < 0 to the component-count parameter of the parallel system."""
    if spec.tag not in PARALLEL_FAMILIES:
        raise UnsupportedCharacterizationError(f"no parallel-system characterization for {spec.tag.value}")
    theta = check_theta(spec, theta)
    if theta >= 0:
        raise DomainError(f"parallel map needs theta < 0, got {theta}")
    if spec.tag == FamilyTag.POISSON:
        return -theta
    return theta / (theta - 1.0)
