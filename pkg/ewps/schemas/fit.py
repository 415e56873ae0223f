"""Fit options, fit results and quantile estimates."""
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ewps.schemas.params import RegressionParams


class FitOptions(BaseModel):
    theta_grid_step: float = Field(0.01, gt=0)
    theta_refine_step: float = Field(0.001, gt=0)
    max_inner_iterations: int = Field(200, gt=0)
    gradient_tolerance: float = Field(1e-8, gt=0)
    # fraction of the domain width kept away from finite endpoints
    endpoint_margin: float = Field(1e-4, gt=0, lt=0.5)
    theta_search_limit: float = Field(100.0, gt=0)
    profile_drop: float = Field(12.0, gt=0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_steps(self) -> "FitOptions":
        if self.theta_refine_step >= self.theta_grid_step:
            raise ValueError("theta_refine_step must be smaller than theta_grid_step")
        return self

    @classmethod
    def from_settings(cls, **overrides) -> "FitOptions":
        from ewps.config import settings

        values = {
            "theta_grid_step": settings.THETA_GRID_STEP,
            "theta_refine_step": settings.THETA_REFINE_STEP,
            "max_inner_iterations": settings.MAX_INNER_ITERATIONS,
            "gradient_tolerance": settings.GRADIENT_TOLERANCE,
            "endpoint_margin": settings.ENDPOINT_MARGIN,
            "theta_search_limit": settings.THETA_SEARCH_LIMIT,
            "profile_drop": settings.PROFILE_DROP,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class ProfilePoint(BaseModel):
    theta: float
    loglik: Optional[float] = None


class FitResult(BaseModel):
    """Estimated Θ = (β, α, θ) with its likelihood, covariance and search metadata."""

    params: RegressionParams
    loglik: float
    aic: float
    names: list[str]
    link: str = "log"
    n: int
    covariance: Optional[list[list[float]]] = None
    standard_errors: Optional[list[float]] = None
    converged: bool = True
    boundary_flag: bool = False
    theta_fixed: bool = False
    iterations: int = 0
    message: str = ""
    profile: list[ProfilePoint] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True)

    @property
    def label(self) -> str:
        return "Weibull" if self.theta_fixed else self.params.spec.label

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def n_params(self) -> int:
        """Free parameters: β, α and θ unless θ is held at 0."""
        return self.k + (1 if self.theta_fixed else 2)

    @property
    def estimates(self) -> NDArray[np.float64]:
        vector = self.params.as_vector()
        return vector[: self.n_params]

    @property
    def covariance_matrix(self) -> Optional[NDArray[np.float64]]:
        if self.covariance is None:
            return None
        return np.asarray(self.covariance, dtype=float)


class QuantileEstimate(BaseModel):
    xi: float = Field(..., gt=0, lt=1)
    point: float = Field(..., gt=0)
    variance: float = Field(..., ge=0)
    ci_low: float
    ci_high: float
    level: float = 0.95

    @model_validator(mode="after")
    def _check_band(self) -> "QuantileEstimate":
        if not self.ci_low <= self.point <= self.ci_high:
            raise ValueError("confidence band must contain the point estimate")
        return self


class CoefficientRow(BaseModel):
    name: str
    value: float
    se: Optional[float] = None
    z: Optional[float] = None
    p_value: Optional[float] = None


class FitSummary(BaseModel):
    """One row of a model comparison: label, estimates (SE), ℓ, LR against Weibull, AIC."""

    label: str
    loglik: float
    aic: float
    converged: bool
    estimates: list[CoefficientRow]
    lr_statistic: Optional[float] = None
    lr_p_value: Optional[float] = None
