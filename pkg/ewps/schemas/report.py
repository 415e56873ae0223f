"""JSON fit report, the on-disk form of a FitResult."""
from typing import Optional

from pydantic import BaseModel, Field

from ewps.schemas.fit import FitResult, ProfilePoint
from ewps.schemas.params import RegressionParams
from ewps.schemas.run import WEIBULL
from ewps.schemas.series import PowerSeriesSpec


class EstimateEntry(BaseModel):
    name: str
    value: float
    se: Optional[float] = None


class HypothesisTest(BaseModel):
    statistic: float
    p_value: float


class FitReport(BaseModel):
    family: str
    label: str
    link: str = "log"
    n: int
    k: int
    estimates: list[EstimateEntry]
    loglik: float
    aic: float
    lr: Optional[HypothesisTest] = None
    wald: Optional[HypothesisTest] = None
    converged: bool
    boundary_flag: bool = False
    profile: list[ProfilePoint] = Field(default_factory=list)
    response_column: str
    covariate_columns: list[str] = Field(default_factory=list)
    intercept: bool = True
    m: Optional[int] = None
    extended: bool = False
    theta_fixed: bool = False
    covariance: Optional[list[list[float]]] = None
    message: str = ""

    @property
    def is_weibull(self) -> bool:
        return self.family == WEIBULL

    def spec(self) -> PowerSeriesSpec:
        family = "poisson" if self.is_weibull else self.family
        return PowerSeriesSpec.of(family, m=self.m, extended=self.extended)

    def to_fit_result(self) -> FitResult:
        """Rebuild the fit without refitting: estimates, covariance and flags come from the report."""
        values = [entry.value for entry in self.estimates]
        if self.theta_fixed:
            values.append(0.0)
        params = RegressionParams.from_vector(values, self.spec())
        ses = [entry.se for entry in self.estimates]
        return FitResult(
            params=params,
            loglik=self.loglik,
            aic=self.aic,
            names=[entry.name for entry in self.estimates],
            link=self.link,
            n=self.n,
            covariance=self.covariance,
            standard_errors=None if any(se is None for se in ses) else ses,
            converged=self.converged,
            boundary_flag=self.boundary_flag,
            theta_fixed=self.theta_fixed,
            message=self.message,
            profile=self.profile,
        )
