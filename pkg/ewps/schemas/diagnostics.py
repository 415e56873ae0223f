"""Quantile residual schemas."""
from typing import Optional

from pydantic import BaseModel, Field


class QQPair(BaseModel):
    theoretical: float
    observed: float


class ResidualSet(BaseModel):
    residuals: list[float]
    cdf_values: list[float]
    clipped: list[bool]
    qq_pairs: list[QQPair]
    # None below the Anderson-Darling minimum sample size
    ad_statistic: Optional[float] = None
    ad_p_value: Optional[float] = Field(None, ge=0, le=1)

    @property
    def n(self) -> int:
        return len(self.residuals)

    @property
    def n_clipped(self) -> int:
        return sum(self.clipped)
