from ewps.schemas.diagnostics import QQPair, ResidualSet
from ewps.schemas.fit import CoefficientRow, FitOptions, FitResult, FitSummary, ProfilePoint, QuantileEstimate
from ewps.schemas.params import EwpsParams, RegressionData, RegressionParams, WeibullParams
from ewps.schemas.report import EstimateEntry, FitReport, HypothesisTest
from ewps.schemas.run import WEIBULL, RunConfig
from ewps.schemas.series import FamilyTag, PowerSeriesSpec, SeriesFamily

__all__ = [
    "CoefficientRow",
    "EstimateEntry",
    "EwpsParams",
    "FamilyTag",
    "FitOptions",
    "FitReport",
    "FitResult",
    "FitSummary",
    "PowerSeriesSpec",
    "ProfilePoint",
    "QQPair",
    "QuantileEstimate",
    "RegressionData",
    "RegressionParams",
    "ResidualSet",
    "RunConfig",
    "SeriesFamily",
    "HypothesisTest",
    "WEIBULL",
    "WeibullParams",
]
