"""Log-likelihood, score vector and observed information of the EWPS regression model.

Everything is evaluated per observation from the quantities

    W = (y / λ)^α,  z = θ e^{-W},
    L1 = log(θ C'(z) / C(θ)),  L2 = z C''(z) / C'(z),
    L3 = z² [C'''(z) / C'(z) - (C''(z) / C'(z))²],

and assembled with the design matrix. L1 is split as P(z) - Q(θ) with
P(z) = log(C'(z) / a_1) and Q(θ) = log(C(θ) / (a_1 θ)); both are analytic
through 0, so θ = 0 needs no separate branch.
"""
import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad

from ewps.errors import DomainError, NumericError
from ewps.schemas.params import EwpsParams, RegressionData, RegressionParams
from ewps.services.ewps_dist import density
from ewps.services.power_series import _derivative, coefficient, log_ratio_derivatives

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Links
# ---------------------------------------------------------------------------


class Link:
    """λ = h^{-1}(η) together with its first two derivatives."""

    name = "link"

    def inverse(self, eta: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.derivatives(eta)[0]

    def forward(self, lam: NDArray[np.float64]) -> NDArray[np.float64]:
        raise NotImplementedError

    def derivatives(self, eta: NDArray[np.float64]):
        raise NotImplementedError

    def log_derivatives(self, eta: NDArray[np.float64]):
        """(log λ, λ'/λ, λ''/λ)."""
        lam, first, second = self.derivatives(eta)
        if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
            raise NumericError(f"link {self.name} produced a non-positive scale")
        return np.log(lam), first / lam, second / lam


class LogLink(Link):
    name = "log"

    def inverse(self, eta):
        return np.exp(eta)

    def forward(self, lam):
        return np.log(lam)

    def derivatives(self, eta):
        lam = np.exp(eta)
        return lam, lam, lam

    def log_derivatives(self, eta):
        eta = np.asarray(eta, dtype=float)
        ones = np.ones_like(eta)
        return eta, ones, ones


_LINKS: dict[str, Link] = {"log": LogLink()}


def get_link(name: Union[str, Link]) -> Link:
    if isinstance(name, Link):
        return name
    try:
        return _LINKS[name]
    except KeyError:
        raise DomainError(f"unknown link '{name}' (available: {', '.join(sorted(_LINKS))})") from None


def link_derivatives(link: Union[str, Link], eta: float):
    """(λ, dλ/dη, d²λ/dη²) at η."""
    lam, first, second = get_link(link).derivatives(np.asarray(eta, dtype=float))
    return float(lam), float(first), float(second)


# ---------------------------------------------------------------------------
# Per-observation workspace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObsWorkspace:
    """Per-observation terms at one parameter point; the D_j are the diagonals."""

    alpha: float
    theta: float
    log_y: NDArray[np.float64]
    log_lam: NDArray[np.float64]
    d1: NDArray[np.float64]  # λ'/λ
    d7: NDArray[np.float64]  # λ''/λ
    log_w: NDArray[np.float64]
    w: NDArray[np.float64]
    q: NDArray[np.float64]  # e^{-W}
    z: NDArray[np.float64]
    p1: NDArray[np.float64]  # C''(z)/C'(z)
    p2: NDArray[np.float64]  # d/dz of p1
    log_ratio: tuple[float, float, float]  # Q, Q', Q''
    l1: NDArray[np.float64]

    @property
    def l2(self) -> NDArray[np.float64]:
        return self.z * self.p1

    @property
    def l3(self) -> NDArray[np.float64]:
        return self.z**2 * self.p2

    @property
    def y_star(self) -> NDArray[np.float64]:
        return self.w * (1.0 + self.l2) - 1.0

    @property
    def d2(self) -> NDArray[np.float64]:
        return self.log_w

    @property
    def d3(self) -> NDArray[np.float64]:
        return self.l2

    @property
    def d4(self) -> NDArray[np.float64]:
        return self.q

    @property
    def d5(self) -> NDArray[np.float64]:
        return self.w

    @property
    def d6(self) -> NDArray[np.float64]:
        return self.l3

    @property
    def d8(self) -> NDArray[np.float64]:
        return self.y_star


def _p_terms(params_spec, z: NDArray[np.float64]):
    c1 = _derivative(params_spec, z, 1)
    c2 = _derivative(params_spec, z, 2)
    c3 = _derivative(params_spec, z, 3)
    a1 = coefficient(params_spec, 1)
    ratio = c2 / c1
    return np.log(c1 / a1), ratio, c3 / c1 - ratio**2


def workspace(theta_vec: RegressionParams, data: RegressionData) -> ObsWorkspace:
    if theta_vec.k != data.k:
        raise DomainError(f"beta has {theta_vec.k} entries but X has {data.k} columns")
    eta = data.X @ theta_vec.beta_array
    log_lam, d1, d7 = get_link(data.link).log_derivatives(eta)
    if np.any(~np.isfinite(log_lam)):
        raise NumericError("linear predictor produced a non-finite scale")
    alpha, theta = theta_vec.alpha, theta_vec.theta
    log_y = np.log(data.y)
    log_w = alpha * (log_y - log_lam)
    with np.errstate(over="ignore"):
        w = np.exp(log_w)
    q = np.exp(-w)
    z = theta * q
    log_p, p1, p2 = _p_terms(theta_vec.spec, z)
    ratio = log_ratio_derivatives(theta_vec.spec, theta)
    return ObsWorkspace(
        alpha=alpha,
        theta=theta,
        log_y=log_y,
        log_lam=log_lam,
        d1=d1,
        d7=d7,
        log_w=log_w,
        w=w,
        q=q,
        z=z,
        p1=p1,
        p2=p2,
        log_ratio=ratio,
        l1=log_p - ratio[0],
    )


def loglik_terms(theta_vec: RegressionParams, data: RegressionData) -> NDArray[np.float64]:
    """Per-observation log densities log f(y_i; λ_i, α, θ)."""
    ws = workspace(theta_vec, data)
    terms = math.log(ws.alpha) + ws.log_w - ws.w - ws.log_y + ws.l1
    if np.any(np.isnan(terms)):
        raise NumericError("log-likelihood evaluated to NaN")
    return terms


def loglik(theta_vec: RegressionParams, data: RegressionData) -> float:
    """ℓ(Θ) = n log α + Σ log W_i - Σ W_i + Σ L1_i + c with c = -Σ log y_i."""
    return float(np.sum(loglik_terms(theta_vec, data)))


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _ObsDerivatives:
    eta: NDArray[np.float64]
    alpha: NDArray[np.float64]
    theta: NDArray[np.float64]
    eta_eta: NDArray[np.float64]
    eta_alpha: NDArray[np.float64]
    alpha_alpha: NDArray[np.float64]
    eta_theta: NDArray[np.float64]
    alpha_theta: NDArray[np.float64]
    theta_theta: NDArray[np.float64]


def _obs_derivatives(ws: ObsWorkspace) -> _ObsDerivatives:
    alpha = ws.alpha
    r1 = ws.d1
    r2 = ws.d7 - ws.d1**2  # (log λ)''
    v = ws.log_w
    w = ws.w
    _, q_first, q_second = ws.log_ratio
    # a1 = W ∂G/∂W and a2 = W² ∂²G/∂W² for G = log W - W + L1
    a1 = -ws.y_star
    live = ws.q > 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        a2 = -1.0 + np.where(live, w**2 * (ws.l2 + ws.l3), 0.0)
        # W ∂²G/∂W∂θ
        w_g_w_theta = np.where(live, -w * ws.q * (ws.p1 + ws.z * ws.p2), 0.0)
    va = v / alpha
    return _ObsDerivatives(
        eta=-alpha * r1 * a1,
        alpha=1.0 / alpha + va * a1,
        theta=ws.q * ws.p1 - q_first,
        eta_eta=a2 * (alpha * r1) ** 2 + a1 * (-alpha * r2 + (alpha * r1) ** 2),
        eta_alpha=-r1 * v * a2 - r1 * (1.0 + v) * a1,
        alpha_alpha=-1.0 / alpha**2 + va**2 * (a2 + a1),
        eta_theta=-alpha * r1 * w_g_w_theta,
        alpha_theta=va * w_g_w_theta,
        theta_theta=ws.q**2 * ws.p2 - q_second,
    )


def score(theta_vec: RegressionParams, data: RegressionData) -> NDArray[np.float64]:
    """U_n(Θ) = (∂ℓ/∂β, ∂ℓ/∂α, ∂ℓ/∂θ)."""
    obs = _obs_derivatives(workspace(theta_vec, data))
    return np.concatenate([data.X.T @ obs.eta, [np.sum(obs.alpha), np.sum(obs.theta)]])


def observed_info(theta_vec: RegressionParams, data: RegressionData) -> NDArray[np.float64]:
    """K_n(Θ) = -∂²ℓ/∂Θ∂Θᵀ, ordered (β_1..β_k, α, θ)."""
    obs = _obs_derivatives(workspace(theta_vec, data))
    X = data.X
    k = data.k
    hessian = np.empty((k + 2, k + 2))
    hessian[:k, :k] = X.T @ (obs.eta_eta[:, None] * X)
    hessian[:k, k] = X.T @ obs.eta_alpha
    hessian[:k, k + 1] = X.T @ obs.eta_theta
    hessian[k, k] = np.sum(obs.alpha_alpha)
    hessian[k, k + 1] = np.sum(obs.alpha_theta)
    hessian[k + 1, k + 1] = np.sum(obs.theta_theta)
    upper = np.triu_indices(k + 2, 1)
    hessian[(upper[1], upper[0])] = hessian[upper]
    return -hessian


# ---------------------------------------------------------------------------
# Score expectations
# ---------------------------------------------------------------------------


def expectation_identities(
    theta_vec: Union[EwpsParams, RegressionParams], quad_points: int = 64
) -> NDArray[np.float64]:
    """Absolute residuals of the zero-mean score identities for one observation.

    Returns |E(Y*)|, |E(log W · Y*) - 1| and
    |E(C''(z) e^{-W} / C'(z)) - (C'(θ)/C(θ) - 1/θ)|, the last right-hand side
    taken as its limit a_2/a_1 at θ = 0. The second identity is the α-score
    having mean zero.
    """
    if quad_points < 64:
        raise DomainError(f"quadrature resolution must be >= 64, got {quad_points}")
    if isinstance(theta_vec, RegressionParams):
        if theta_vec.k != 1:
            raise DomainError("expectation identities need an intercept-only parameter vector")
        params = EwpsParams(lam=math.exp(theta_vec.beta[0]), alpha=theta_vec.alpha, theta=theta_vec.theta, spec=theta_vec.spec)
    else:
        params = theta_vec

    def terms(y: float) -> tuple[float, float, float]:
        log_w = params.alpha * (math.log(y) - math.log(params.lam))
        w = math.exp(min(log_w, 700.0))
        q = math.exp(-w)
        z = np.float64(params.theta * q)
        _, p1, _ = _p_terms(params.spec, z)
        y_star = w * (1.0 + float(z * p1)) - 1.0
        return y_star, log_w * y_star, q * float(p1)

    def expectation(index: int) -> float:
        def integrand(y: float) -> float:
            return terms(y)[index] * density(params, y)

        head, _ = quad(integrand, 0.0, params.lam, limit=quad_points, epsabs=1e-11, epsrel=1e-10)
        tail, _ = quad(integrand, params.lam, math.inf, limit=quad_points, epsabs=1e-11, epsrel=1e-10)
        return head + tail

    target = log_ratio_derivatives(params.spec, params.theta)[1]
    residuals = np.array(
        [
            abs(expectation(0)),
            abs(expectation(1) - 1.0),
            abs(expectation(2) - target),
        ]
    )
    logger.debug("expectation residuals for %s: %s", params, residuals)
    return residuals
