"""Extended Weibull power series lifetime distributions and regression."""
from ewps.config import settings
from ewps.errors import EwpsError
from ewps.schemas import EwpsParams, FitOptions, FitResult, PowerSeriesSpec, RegressionData, RegressionParams

__version__ = settings.APP_VERSION

__all__ = [
    "EwpsError",
    "EwpsParams",
    "FitOptions",
    "FitResult",
    "PowerSeriesSpec",
    "RegressionData",
    "RegressionParams",
    "__version__",
]
