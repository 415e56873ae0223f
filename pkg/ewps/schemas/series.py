"""Power series family descriptors."""
import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FamilyTag(str, Enum):
    POISSON = "poisson"
    LOGARITHMIC = "logarithmic"
    GEOMETRIC = "geometric"
    BINOMIAL = "binomial"
    NEGATIVE_BINOMIAL = "negative_binomial"
    LOGARITHMIC_II = "logarithmic_ii"


# Families whose coefficients depend on the known integer m
FAMILIES_WITH_M = frozenset({FamilyTag.BINOMIAL, FamilyTag.NEGATIVE_BINOMIAL})
# Families whose θ-domain may be extended below -s
EXTENDABLE_FAMILIES = frozenset({FamilyTag.GEOMETRIC, FamilyTag.LOGARITHMIC})

# Short model labels used in reports (EWP, EWL, ...)
FAMILY_LABELS = {
    FamilyTag.POISSON: "EWP",
    FamilyTag.LOGARITHMIC: "EWL",
    FamilyTag.GEOMETRIC: "EWG",
    FamilyTag.BINOMIAL: "EWB",
    FamilyTag.NEGATIVE_BINOMIAL: "EWNB",
    FamilyTag.LOGARITHMIC_II: "EWLII",
}


class SeriesFamily(BaseModel):
    tag: FamilyTag
    m: Optional[int] = Field(None, ge=2)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_m(self) -> "SeriesFamily":
        if self.tag in FAMILIES_WITH_M and self.m is None:
            raise ValueError(f"family {self.tag.value} requires m >= 2")
        if self.tag not in FAMILIES_WITH_M and self.m is not None:
            raise ValueError(f"family {self.tag.value} does not take m")
        return self


class PowerSeriesSpec(BaseModel):
    """A power series family together with its θ-domain.

    ``extended`` switches Geometric and Logarithmic to the larger domain
    (-inf, 1); every other family rejects it.
    """

    family: SeriesFamily
    extended: bool = False

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_extended(self) -> "PowerSeriesSpec":
        if self.extended and self.family.tag not in EXTENDABLE_FAMILIES:
            raise ValueError(
                f"extended domain is only available for geometric and logarithmic, not {self.family.tag.value}"
            )
        return self

    @classmethod
    def of(cls, tag: FamilyTag | str, m: Optional[int] = None, extended: bool = False) -> "PowerSeriesSpec":
        return cls(family=SeriesFamily(tag=FamilyTag(tag), m=m), extended=extended)

    @property
    def tag(self) -> FamilyTag:
        return self.family.tag

    @property
    def m(self) -> Optional[int]:
        return self.family.m

    @property
    def s(self) -> float:
        """Radius of convergence (upper θ endpoint)."""
        if self.tag in (FamilyTag.POISSON, FamilyTag.BINOMIAL):
            return math.inf
        return 1.0

    @property
    def s_star(self) -> float:
        """Lower θ endpoint; -inf on the extended domain."""
        tag = self.tag
        if tag == FamilyTag.POISSON or self.extended:
            return -math.inf
        if tag == FamilyTag.NEGATIVE_BINOMIAL:
            return 1.0 / (1.0 - self.m)
        return -1.0

    @property
    def label(self) -> str:
        return FAMILY_LABELS[self.tag]

    def __str__(self) -> str:
        text = self.tag.value
        if self.m is not None:
            text += f"(m={self.m})"
        if self.extended:
            text += "[extended]"
        return text
