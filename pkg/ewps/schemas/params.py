"""Distribution and regression parameter objects."""
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ewps.schemas.series import PowerSeriesSpec


def _default_spec() -> PowerSeriesSpec:
    # θ = 0 is Weibull for every family; Poisson is the neutral carrier
    return PowerSeriesSpec.of("poisson")


class WeibullParams(BaseModel):
    lam: float = Field(..., gt=0, alias="lambda")
    alpha: float = Field(..., gt=0)

    model_config = ConfigDict(frozen=True, populate_by_name=True)


class EwpsParams(BaseModel):
    """EWPS(λ, α, θ; C). θ = 0 is exactly Weibull(λ, α)."""

    lam: float = Field(..., gt=0, alias="lambda")
    alpha: float = Field(..., gt=0)
    theta: float = 0.0
    spec: PowerSeriesSpec = Field(default_factory=_default_spec)

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _check_theta(self) -> "EwpsParams":
        from ewps.services.power_series import check_theta

        check_theta(self.spec, self.theta)
        return self

    @classmethod
    def of(cls, lam: float, alpha: float, theta: float = 0.0, spec: Optional[PowerSeriesSpec] = None) -> "EwpsParams":
        return cls(lam=lam, alpha=alpha, theta=theta, spec=spec or _default_spec())

    @property
    def weibull(self) -> WeibullParams:
        return WeibullParams(lam=self.lam, alpha=self.alpha)

    def with_theta(self, theta: float) -> "EwpsParams":
        return EwpsParams(lam=self.lam, alpha=self.alpha, theta=theta, spec=self.spec)


class RegressionParams(BaseModel):
    """Θ = (β, α, θ) of the EWPS regression model."""

    beta: tuple[float, ...]
    alpha: float = Field(..., gt=0)
    theta: float = 0.0
    spec: PowerSeriesSpec = Field(default_factory=_default_spec)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_theta(self) -> "RegressionParams":
        from ewps.services.power_series import check_theta

        check_theta(self.spec, self.theta)
        return self

    @classmethod
    def from_vector(cls, vector, spec: PowerSeriesSpec) -> "RegressionParams":
        """Build from the stacked vector (β_1..β_k, α, θ)."""
        values = [float(v) for v in vector]
        return cls(beta=tuple(values[:-2]), alpha=values[-2], theta=values[-1], spec=spec)

    @property
    def beta_array(self) -> NDArray[np.float64]:
        return np.asarray(self.beta, dtype=float)

    @property
    def k(self) -> int:
        return len(self.beta)

    def as_vector(self) -> NDArray[np.float64]:
        return np.concatenate([self.beta_array, [self.alpha, self.theta]])


class RegressionData(BaseModel):
    """Responses y (n), covariates X (n x k) and the link name."""

    y: np.ndarray
    X: np.ndarray
    link: str = "log"
    covariate_names: tuple[str, ...] = ()

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("y", mode="before")
    @classmethod
    def _as_vector(cls, value) -> NDArray[np.float64]:
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 1:
            raise ValueError("y must be one-dimensional")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("all responses must be positive and finite")
        return arr

    @field_validator("X", mode="before")
    @classmethod
    def _as_matrix(cls, value) -> NDArray[np.float64]:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("X must be a matrix")
        if not np.all(np.isfinite(arr)):
            raise ValueError("covariates must be finite")
        return arr

    @model_validator(mode="after")
    def _check_shapes(self) -> "RegressionData":
        n, k = self.X.shape
        if self.y.shape[0] != n:
            raise ValueError(f"y has {self.y.shape[0]} rows but X has {n}")
        if self.covariate_names and len(self.covariate_names) != k:
            raise ValueError("covariate_names must have one entry per column of X")
        return self

    @classmethod
    def intercept_only(cls, y) -> "RegressionData":
        y = np.asarray(y, dtype=float)
        return cls(y=y, X=np.ones((y.shape[0], 1)), covariate_names=("intercept",))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def names(self) -> list[str]:
        if self.covariate_names:
            return list(self.covariate_names)
        return [f"beta{j}" for j in range(self.k)]
