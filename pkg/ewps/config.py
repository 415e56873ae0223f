"""Application configuration using Pydantic Settings."""
import os

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Load from environment and .env file."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # App
    APP_NAME: str = "EWPS Lifetime Regression"
    APP_VERSION: str = "0.1.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Parallelism for profile grids (0 = machine parallelism)
    EWPS_THREADS: int = 0

    # Fitting defaults
    THETA_GRID_STEP: float = 0.01
    THETA_REFINE_STEP: float = 0.001
    MAX_INNER_ITERATIONS: int = 200
    GRADIENT_TOLERANCE: float = 1e-8
    ENDPOINT_MARGIN: float = 1e-4
    THETA_SEARCH_LIMIT: float = 100.0  # only used for infinite domain endpoints
    PROFILE_DROP: float = 12.0

    @property
    def threads(self) -> int:
        if self.EWPS_THREADS > 0:
            return self.EWPS_THREADS
        return os.cpu_count() or 1


settings = Settings()
