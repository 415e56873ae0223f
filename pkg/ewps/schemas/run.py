"""Command-line run configuration."""
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ewps.schemas.series import FamilyTag, PowerSeriesSpec

WEIBULL = "weibull"

Subcommand = Literal["fit", "profile", "quantiles", "residuals", "curves", "simulate", "compare"]
OutputFormat = Literal["json", "csv"]


class RunConfig(BaseModel):
    """Options shared by the CLI subcommands that read a data file."""

    subcommand: Subcommand
    input_path: Optional[Path] = None
    response_column: str = "y"
    covariate_columns: list[str] = Field(default_factory=list)
    family: str = FamilyTag.GEOMETRIC.value
    m: Optional[int] = Field(None, ge=2)
    extended: bool = False
    link: str = "log"
    intercept: bool = True
    output_path: Optional[Path] = None
    seed: int = 0
    format: OutputFormat = "json"

    model_config = ConfigDict(frozen=True)

    @field_validator("family")
    @classmethod
    def _known_family(cls, value: str) -> str:
        value = value.strip().lower()
        if value != WEIBULL and value not in {tag.value for tag in FamilyTag}:
            known = ", ".join([WEIBULL] + [tag.value for tag in FamilyTag])
            raise ValueError(f"unknown family '{value}' (expected one of: {known})")
        return value

    @model_validator(mode="after")
    def _check_columns(self) -> "RunConfig":
        if self.response_column in self.covariate_columns:
            raise ValueError(f"response column '{self.response_column}' cannot also be a covariate")
        if len(set(self.covariate_columns)) != len(self.covariate_columns):
            raise ValueError("covariate columns must be distinct")
        if not self.covariate_columns and not self.intercept:
            raise ValueError("the model needs an intercept or at least one covariate")
        return self

    @property
    def is_weibull(self) -> bool:
        return self.family == WEIBULL

    def spec(self) -> PowerSeriesSpec:
        """Family descriptor; the Weibull null is carried by Poisson with θ held at 0."""
        if self.is_weibull:
            return PowerSeriesSpec.of(FamilyTag.POISSON)
        return PowerSeriesSpec.of(self.family, m=self.m, extended=self.extended)
