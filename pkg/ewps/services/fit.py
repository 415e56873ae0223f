"""Maximum-likelihood fitting of the EWPS regression model.

θ is located by walking a profile-likelihood grid outwards from the Weibull
fit (θ = 0), warm-starting each inner (β, α) Newton solve from its neighbour.
A walk that stops early is continued by a coarse scan to the search bound.
The grid argmax is refined and polished with a full Newton step on (β, α, θ).
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray
from scipy.stats import chi2, norm

from ewps.errors import CovarianceError, DomainError, EwpsError, NestingError
from ewps.schemas.fit import CoefficientRow, FitOptions, FitResult, FitSummary, ProfilePoint, QuantileEstimate
from ewps.schemas.params import EwpsParams, RegressionData, RegressionParams
from ewps.schemas.series import FamilyTag, PowerSeriesSpec
from ewps.services.ewps_dist import quantile_factor
from ewps.services.likelihood import get_link, loglik, observed_info, score
from ewps.services.power_series import ENDPOINT_TOL, theta_domain

logger = logging.getLogger(__name__)

# a step is accepted when ℓ does not drop by more than rounding noise
_ACCEPT_RTOL = 1e-12
_MAX_HALVINGS = 60
_LR_SLACK = 1e-8
# coarse scan step, in grid steps
_SCAN_FACTOR = 10


@dataclass
class _Inner:
    params: RegressionParams
    loglik: float
    converged: bool
    iterations: int


def _weibull_spec() -> PowerSeriesSpec:
    return PowerSeriesSpec.of(FamilyTag.POISSON)


def _options(options: Optional[FitOptions]) -> FitOptions:
    return options if options is not None else FitOptions.from_settings()


def check_design(data: RegressionData) -> None:
    """n > k and a full-rank design are required before fitting."""
    if data.n <= data.k:
        raise DomainError(f"need more observations than covariates (n={data.n}, k={data.k})")
    if np.linalg.matrix_rank(data.X) < data.k:
        raise DomainError("design matrix X is not of full column rank")


def _safe_loglik(params: RegressionParams, data: RegressionData) -> float:
    try:
        value = loglik(params, data)
    except EwpsError:
        return -math.inf
    return value if not math.isnan(value) else -math.inf


def _from_vector(vector: NDArray[np.float64], theta: Optional[float], spec: PowerSeriesSpec) -> Optional[RegressionParams]:
    values = list(vector) + ([theta] if theta is not None else [])
    try:
        return RegressionParams.from_vector(values, spec)
    except ValueError:
        return None


def _ascent_direction(info: NDArray[np.float64], grad: NDArray[np.float64]) -> tuple[NDArray[np.float64], bool]:
    """Newton direction info⁻¹ grad, or the scaled gradient when info is not positive definite."""
    try:
        chol = np.linalg.cholesky(info)
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, grad))
        if np.all(np.isfinite(step)):
            return step, True
    except np.linalg.LinAlgError:
        pass
    return grad / max(1.0, float(np.linalg.norm(grad))), False


def _newton(
    data: RegressionData,
    start: RegressionParams,
    options: FitOptions,
    fix_theta: bool,
) -> _Inner:
    """Newton ascent with step halving on (β, α), or on (β, α, θ) when θ is free."""
    spec = start.spec
    size = start.k + (1 if fix_theta else 2)
    theta = start.theta if fix_theta else None
    params = start
    current = _safe_loglik(params, data)
    if not math.isfinite(current):
        raise DomainError("log-likelihood is not finite at the starting point")
    fallback_logged = False
    for iteration in range(1, options.max_inner_iterations + 1):
        grad = score(params, data)[:size]
        if float(np.max(np.abs(grad))) <= options.gradient_tolerance:
            return _Inner(params, current, True, iteration - 1)
        info = observed_info(params, data)[:size, :size]
        direction, is_newton = _ascent_direction(info, grad)
        if not is_newton and not fallback_logged:
            logger.debug("observed information not positive definite at %s; using gradient ascent", params.as_vector())
            fallback_logged = True
        vector = params.as_vector()[:size]
        step = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS):
            candidate = _from_vector(vector + step * direction, theta, spec)
            if candidate is not None:
                value = _safe_loglik(candidate, data)
                if value >= current - _ACCEPT_RTOL * max(1.0, abs(current)):
                    params, current, accepted = candidate, value, True
                    break
            step /= 2.0
        if not accepted:
            grad = score(params, data)[:size]
            done = float(np.max(np.abs(grad))) <= options.gradient_tolerance
            logger.debug("line search stalled after %d iterations (converged=%s)", iteration, done)
            return _Inner(params, current, done, iteration)
    grad = score(params, data)[:size]
    done = float(np.max(np.abs(grad))) <= options.gradient_tolerance
    return _Inner(params, current, done, options.max_inner_iterations)


def _weibull_start(data: RegressionData) -> RegressionParams:
    link = get_link(data.link)
    beta, *_ = np.linalg.lstsq(data.X, link.forward(data.y), rcond=None)
    return RegressionParams(beta=tuple(float(b) for b in beta), alpha=1.0, theta=0.0, spec=_weibull_spec())


def _parameter_names(data: RegressionData, theta_fixed: bool) -> list[str]:
    return data.names() + (["alpha"] if theta_fixed else ["alpha", "theta"])


def _covariance(info: NDArray[np.float64]) -> Optional[NDArray[np.float64]]:
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        return None
    cov = np.linalg.inv(info)
    return (cov + cov.T) / 2.0


def _build_result(
    data: RegressionData,
    inner: _Inner,
    theta_fixed: bool,
    profile: Sequence[ProfilePoint] = (),
    boundary_flag: bool = False,
    message: str = "",
) -> FitResult:
    size = inner.params.k + (1 if theta_fixed else 2)
    info = observed_info(inner.params, data)[:size, :size]
    cov = _covariance(info)
    converged = inner.converged and not boundary_flag
    if cov is None:
        logger.warning("observed information is not positive definite; standard errors unavailable")
        message = message or "observed information is not positive definite"
        converged = False
    if not inner.converged and not message:
        message = "Newton iterations did not reach the gradient tolerance"
    return FitResult(
        params=inner.params,
        loglik=inner.loglik,
        aic=aic_from(inner.loglik, size),
        names=_parameter_names(data, theta_fixed),
        link=data.link,
        n=data.n,
        covariance=None if cov is None else cov.tolist(),
        standard_errors=None if cov is None else np.sqrt(np.diag(cov)).tolist(),
        converged=converged,
        boundary_flag=boundary_flag,
        theta_fixed=theta_fixed,
        iterations=inner.iterations,
        message=message,
        profile=list(profile),
    )


def _fit_weibull_inner(data: RegressionData, options: FitOptions) -> _Inner:
    check_design(data)
    inner = _newton(data, _weibull_start(data), options, fix_theta=True)
    logger.info("Weibull fit: loglik=%.6f converged=%s iterations=%d", inner.loglik, inner.converged, inner.iterations)
    return inner


def fit_weibull(data: RegressionData, options: Optional[FitOptions] = None) -> FitResult:
    """The null model: EWPS with θ held at 0."""
    return _build_result(data, _fit_weibull_inner(data, _options(options)), theta_fixed=True)


# ---------------------------------------------------------------------------
# θ search
# ---------------------------------------------------------------------------


def search_bounds(spec: PowerSeriesSpec, options: FitOptions) -> tuple[float, float]:
    """Closed θ interval searched by the grid walk."""
    lower, upper = theta_domain(spec)
    if math.isfinite(lower) and math.isfinite(upper):
        scale = upper - lower
    else:
        finite = [abs(v) for v in (lower, upper) if math.isfinite(v)]
        scale = max(finite + [1.0])
    margin = max(options.endpoint_margin * scale, 2.0 * ENDPOINT_TOL)
    lo = lower + margin if math.isfinite(lower) else -options.theta_search_limit
    hi = upper - margin if math.isfinite(upper) else options.theta_search_limit
    return lo, hi


def _with_theta(params: RegressionParams, theta: float, spec: PowerSeriesSpec) -> RegressionParams:
    return RegressionParams(beta=params.beta, alpha=params.alpha, theta=theta, spec=spec)


def _profile_point(
    data: RegressionData, spec: PowerSeriesSpec, theta: float, warm: RegressionParams, options: FitOptions
) -> _Inner:
    return _newton(data, _with_theta(warm, theta, spec), options, fix_theta=True)


def _grid_step(theta: float, base: float) -> float:
    # absolute steps near 0, relative steps once |θ| > 1
    return base * max(1.0, abs(theta))


def _walk(
    data: RegressionData,
    spec: PowerSeriesSpec,
    origin: _Inner,
    direction: int,
    bound: float,
    options: FitOptions,
) -> tuple[list[tuple[float, _Inner]], bool]:
    """Walk θ from 0 towards ``bound``; returns the visited points and whether the bound was reached."""
    points: list[tuple[float, _Inner]] = []
    best = origin.loglik
    warm = origin.params
    theta = 0.0
    while True:
        theta = theta + direction * _grid_step(theta, options.theta_grid_step)
        if (direction > 0 and theta > bound) or (direction < 0 and theta < bound):
            return points, True
        try:
            inner = _profile_point(data, spec, theta, warm, options)
        except EwpsError:
            logger.debug("profile point theta=%s failed; stopping the walk", theta)
            return points, False
        points.append((theta, inner))
        warm = inner.params
        best = max(best, inner.loglik)
        if inner.loglik < best - options.profile_drop:
            return points, False


def _scan(
    data: RegressionData,
    spec: PowerSeriesSpec,
    start: float,
    direction: int,
    bound: float,
    warm: RegressionParams,
    options: FitOptions,
) -> list[tuple[float, _Inner]]:
    """Coarse pass from ``start`` to ``bound``; failed points are skipped."""
    points: list[tuple[float, _Inner]] = []
    theta = start
    while True:
        theta = theta + direction * _grid_step(theta, _SCAN_FACTOR * options.theta_grid_step)
        if (direction > 0 and theta > bound) or (direction < 0 and theta < bound):
            return points
        try:
            inner = _profile_point(data, spec, theta, warm, options)
        except EwpsError:
            logger.debug("scan point theta=%s failed", theta)
            continue
        points.append((theta, inner))
        warm = inner.params


def _extend(
    data: RegressionData,
    spec: PowerSeriesSpec,
    origin: _Inner,
    walked: list[tuple[float, _Inner]],
    hit: bool,
    direction: int,
    bound: float,
    options: FitOptions,
) -> tuple[list[tuple[float, _Inner]], bool]:
    """Complete a walk that stopped early with a coarse scan to the bound.

    When the scan finds a higher profile value than the walk, the stretch between
    its coarse neighbours is filled in at the grid step.
    """
    if hit:
        return walked, hit
    last_theta, last = walked[-1] if walked else (0.0, origin)
    scanned = _scan(data, spec, last_theta, direction, bound, last.params, options)
    if not scanned:
        return walked, hit
    walk_best = max([origin.loglik] + [inner.loglik for _, inner in walked])
    index = max(range(len(scanned)), key=lambda i: scanned[i][1].loglik)
    theta_far, far = scanned[index]
    if far.loglik <= walk_best:
        return walked + scanned, True
    logger.info("%s coarse scan found a higher profile value at theta=%.4f", spec.label, theta_far)
    inner_edge = scanned[index - 1][0] if index > 0 else last_theta
    outer_edge = scanned[index + 1][0] if index + 1 < len(scanned) else bound
    step = _grid_step(theta_far, options.theta_grid_step)
    coarse = [theta for theta, _ in scanned]
    fine: list[tuple[float, _Inner]] = []
    for theta in np.arange(min(inner_edge, outer_edge) + step, max(inner_edge, outer_edge), step):
        theta = float(theta)
        if min(abs(theta - c) for c in coarse) < step / 2.0:
            continue
        try:
            fine.append((theta, _profile_point(data, spec, theta, far.params, options)))
        except EwpsError:
            logger.debug("fine point theta=%s failed", theta)
    return walked + scanned + fine, True


def fit_mle(data: RegressionData, spec: PowerSeriesSpec, options: Optional[FitOptions] = None) -> FitResult:
    """Maximum-likelihood fit of (β, α, θ) for the given power series family.

    Each side of θ = 0 is walked until the profile drops ``profile_drop`` below its
    running best, then scanned coarsely out to the search bound.
    """
    options = _options(options)
    weibull = _fit_weibull_inner(data, options)
    lo, hi = search_bounds(spec, options)
    origin = _Inner(_with_theta(weibull.params, 0.0, spec), weibull.loglik, weibull.converged, weibull.iterations)

    down, hit_lo = _walk(data, spec, origin, -1, lo, options)
    up, hit_hi = _walk(data, spec, origin, +1, hi, options)
    down, hit_lo = _extend(data, spec, origin, down, hit_lo, -1, lo, options)
    up, hit_hi = _extend(data, spec, origin, up, hit_hi, +1, hi, options)
    visited = sorted(down + [(0.0, origin)] + up, key=lambda item: item[0])
    grid = [theta for theta, _ in visited]
    index = max(range(len(visited)), key=lambda i: visited[i][1].loglik)
    theta_best, best = visited[index]
    logger.info("%s grid argmax theta=%.4f loglik=%.6f over %d points", spec.label, theta_best, best.loglik, len(visited))

    # refine between the neighbours of the grid argmax
    left = grid[index - 1] if index > 0 else max(lo, theta_best - _grid_step(theta_best, options.theta_grid_step))
    right = grid[index + 1] if index + 1 < len(grid) else min(hi, theta_best + _grid_step(theta_best, options.theta_grid_step))
    refine_step = _grid_step(theta_best, options.theta_refine_step)
    refined: list[tuple[float, _Inner]] = []
    for theta in np.arange(left + refine_step, right, refine_step):
        theta = float(theta)
        if abs(theta - theta_best) < refine_step / 2.0:
            continue
        try:
            refined.append((theta, _profile_point(data, spec, theta, best.params, options)))
        except EwpsError:
            logger.debug("refine point theta=%s failed", theta)
    for theta, inner in refined:
        if inner.loglik > best.loglik:
            theta_best, best = theta, inner
    curve = sorted(visited + refined, key=lambda item: item[0])
    profile = [ProfilePoint(theta=theta, loglik=inner.loglik) for theta, inner in curve]

    at_edge = (hit_lo and theta_best <= grid[0]) or (hit_hi and theta_best >= grid[-1])
    if at_edge:
        logger.warning("profile maximum for %s lies on the search boundary (theta=%.6g)", spec.label, theta_best)
        return _build_result(
            data,
            best,
            theta_fixed=False,
            profile=profile,
            boundary_flag=True,
            message=f"profile maximum on the search boundary at theta={theta_best:.6g}",
        )

    polished = _newton(data, best.params, options, fix_theta=False)
    logger.info(
        "%s fit: theta=%.6f loglik=%.6f converged=%s", spec.label, polished.params.theta, polished.loglik, polished.converged
    )
    return _build_result(data, polished, theta_fixed=False, profile=profile)


def _profile_chunk(
    data: RegressionData,
    spec: PowerSeriesSpec,
    thetas: Sequence[float],
    start: RegressionParams,
    options: FitOptions,
) -> list[Optional[float]]:
    values: list[Optional[float]] = []
    warm = start
    for theta in thetas:
        try:
            inner = _profile_point(data, spec, theta, warm, options)
        except Exception:
            logger.exception("profile point theta=%s failed", theta)
            values.append(None)
            continue
        warm = inner.params
        values.append(inner.loglik)
    return values


def profile_theta(
    data: RegressionData,
    spec: PowerSeriesSpec,
    grid: Sequence[float],
    options: Optional[FitOptions] = None,
    threads: Optional[int] = None,
) -> list[ProfilePoint]:
    """Profile log-likelihood max over (β, α) at each θ of ``grid``, in grid order."""
    from ewps.config import settings

    options = _options(options)
    lower, upper = theta_domain(spec)
    for theta in grid:
        if not lower < theta < upper:
            raise DomainError(f"grid value {theta} outside the open domain ({lower}, {upper}) of {spec}")
    if not grid:
        return []
    start = _with_theta(_fit_weibull_inner(data, options).params, 0.0, spec)
    workers = max(1, min(threads or settings.threads, len(grid)))
    size = math.ceil(len(grid) / workers)
    chunks = [list(grid[i : i + size]) for i in range(0, len(grid), size)]
    if len(chunks) == 1:
        results = [_profile_chunk(data, spec, chunks[0], start, options)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_profile_chunk, data, spec, chunk, start, options) for chunk in chunks]
            results = [future.result() for future in futures]
    values = [value for chunk in results for value in chunk]
    return [ProfilePoint(theta=float(theta), loglik=value) for theta, value in zip(grid, values)]


# ---------------------------------------------------------------------------
# Tests and summaries
# ---------------------------------------------------------------------------


def lr_test(full: Union[FitResult, float], null_loglik: float, df: int = 1) -> tuple[float, float]:
    """Likelihood-ratio statistic 2(ℓ_full - ℓ_null) and its χ²_df upper-tail p-value."""
    full_loglik = full.loglik if isinstance(full, FitResult) else float(full)
    statistic = 2.0 * (full_loglik - null_loglik)
    if statistic < -_LR_SLACK:
        raise NestingError(f"full model log-likelihood {full_loglik} is below the null model's {null_loglik}")
    statistic = max(statistic, 0.0)
    return statistic, float(chi2.sf(statistic, df))


def aic_from(loglik_value: float, n_params: int) -> float:
    return 2.0 * n_params - 2.0 * loglik_value


def aic(fit: FitResult) -> float:
    """AIC = 2(k+2) - 2ℓ̂, or 2(k+1) - 2ℓ̂ when θ is held at 0."""
    return aic_from(fit.loglik, fit.n_params)


def _require_covariance(fit: FitResult) -> NDArray[np.float64]:
    cov = fit.covariance_matrix
    if cov is None:
        raise CovarianceError("fit has no positive-definite covariance estimate")
    return cov


def wald_intervals(fit: FitResult, level: float = 0.95) -> list[tuple[str, float, float]]:
    if not 0 < level < 1:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")
    cov = _require_covariance(fit)
    z = norm.ppf((1.0 + level) / 2.0)
    se = np.sqrt(np.diag(cov))
    return [(name, float(v - z * s), float(v + z * s)) for name, v, s in zip(fit.names, fit.estimates, se)]


def wald_test(fit: FitResult, index: int = -1) -> tuple[float, float]:
    """(estimate / SE)² against χ²_1; by default for θ."""
    if fit.theta_fixed and index == -1:
        raise DomainError("theta is fixed in this fit; there is nothing to test")
    cov = _require_covariance(fit)
    estimate = float(fit.estimates[index])
    se = math.sqrt(float(np.diag(cov)[index]))
    statistic = (estimate / se) ** 2
    return statistic, float(chi2.sf(statistic, 1))


def coefficient_table(fit: FitResult) -> list[CoefficientRow]:
    rows = []
    ses = fit.standard_errors or [None] * fit.n_params
    for name, value, se in zip(fit.names, fit.estimates, ses):
        if se is None or se == 0:
            rows.append(CoefficientRow(name=name, value=float(value), se=se))
            continue
        z = float(value) / se
        rows.append(CoefficientRow(name=name, value=float(value), se=se, z=z, p_value=float(2.0 * norm.sf(abs(z)))))
    return rows


def summarize(fit: FitResult, null: Optional[FitResult] = None) -> FitSummary:
    statistic = p_value = None
    if null is not None and not fit.theta_fixed:
        statistic, p_value = lr_test(fit, null.loglik)
    return FitSummary(
        label=fit.label,
        loglik=fit.loglik,
        aic=fit.aic,
        converged=fit.converged,
        estimates=coefficient_table(fit),
        lr_statistic=statistic,
        lr_p_value=p_value,
    )


def compare_models(
    data: RegressionData,
    families: Sequence[PowerSeriesSpec],
    options: Optional[FitOptions] = None,
) -> list[FitSummary]:
    """Weibull followed by one row per family, each with its LR test against Weibull."""
    options = _options(options)
    null = fit_weibull(data, options)
    rows = [summarize(null)]
    for spec in families:
        try:
            fit = fit_mle(data, spec, options)
        except EwpsError:
            logger.exception("fit failed for %s", spec)
            continue
        rows.append(summarize(fit, null))
    return rows


# ---------------------------------------------------------------------------
# Quantiles
# ---------------------------------------------------------------------------


def _theta_bounds(spec: PowerSeriesSpec) -> tuple[float, float]:
    lower, upper = theta_domain(spec)
    return lower + ENDPOINT_TOL, upper - ENDPOINT_TOL


def quantile_factor_derivative(spec: PowerSeriesSpec, theta: float, xi: float) -> float:
    """dB_ξ/dθ by central differences, one-sided next to a domain endpoint."""
    h = 1e-6 * max(abs(theta), 1.0)
    lower, upper = _theta_bounds(spec)
    if theta + h >= upper:
        return (quantile_factor(spec, theta, xi) - quantile_factor(spec, theta - h, xi)) / h
    if theta - h <= lower:
        return (quantile_factor(spec, theta + h, xi) - quantile_factor(spec, theta, xi)) / h
    return (quantile_factor(spec, theta + h, xi) - quantile_factor(spec, theta - h, xi)) / (2.0 * h)


def quantile_fit(fit: FitResult, xi: float, x_new: Sequence[float], level: float = 0.95) -> QuantileEstimate:
    """Plug-in ξ-quantile at covariate row ``x_new`` with its delta-method variance."""
    if not 0 < xi < 1:
        raise DomainError(f"xi must lie in (0, 1), got {xi}")
    x = np.asarray(x_new, dtype=float)
    params = fit.params
    if x.shape != (params.k,):
        raise DomainError(f"covariate row must have {params.k} entries")
    cov = _require_covariance(fit)
    eta = float(x @ params.beta_array)
    lam, dlam, _ = get_link(fit.link).derivatives(np.asarray(eta))
    lam, dlam = float(lam), float(dlam)
    alpha, theta, spec = params.alpha, params.theta, params.spec
    b = float(quantile_factor(spec, theta, xi))
    b_root = b ** (1.0 / alpha)
    point = lam * b_root
    gradient = [dlam * b_root * x, [-lam * b_root * math.log(b) / alpha**2]]
    if not fit.theta_fixed:
        b_prime = quantile_factor_derivative(spec, theta, xi)
        gradient.append([lam * b_prime * b ** (1.0 / alpha - 1.0) / alpha])
    e = np.concatenate(gradient)
    variance = max(float(e @ cov @ e), 0.0)
    half = float(norm.ppf((1.0 + level) / 2.0)) * math.sqrt(variance)
    return QuantileEstimate(xi=xi, point=point, variance=variance, ci_low=point - half, ci_high=point + half, level=level)


def quantile_intercept(fit: FitResult, xi: float) -> float:
    """β_0 + log(B_ξ(θ)) / α: with the log link, q_ξ = exp(xᵀβ) with this value as intercept."""
    if get_link(fit.link).name != "log":
        raise DomainError("the quantile intercept form needs the log link")
    b = float(quantile_factor(fit.params.spec, fit.params.theta, xi))
    return fit.params.beta[0] + math.log(b) / fit.params.alpha


def fitted_distribution(fit: FitResult, x_row: Sequence[float]) -> EwpsParams:
    """EWPS(λ_i, α̂, θ̂) at one covariate row."""
    eta = float(np.asarray(x_row, dtype=float) @ fit.params.beta_array)
    lam = float(get_link(fit.link).inverse(np.asarray(eta)))
    return EwpsParams(lam=lam, alpha=fit.params.alpha, theta=fit.params.theta, spec=fit.params.spec)
