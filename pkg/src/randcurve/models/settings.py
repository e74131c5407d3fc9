"""Runtime settings for randcurve."""

from pydantic import Field
from pydantic_settings import BaseSettings


class RandcurveSettings(BaseSettings):
    """Configuration settings read from ``RANDCURVE_*`` environment variables."""

    workers: int = Field(1, ge=1, description="Worker processes for Monte-Carlo runs")
    debug_checks: bool = Field(
        False, description="Verify max-flow/min-cut duality on every solve"
    )
    output_dir: str = Field("runs", description="Default directory for record files")
    log_level: str = Field("INFO", description="Root logging level for the entry points")
    dinkelbach_tolerance: float = Field(
        1e-12, gt=0, description="Stop once the parametric subproblem optimum drops below this"
    )
    max_dinkelbach_iterations: int = Field(200, ge=1)

    model_config = {"env_prefix": "RANDCURVE_", "case_sensitive": False}


# Global settings instance
_settings: RandcurveSettings | None = None


def get_settings() -> RandcurveSettings:
    """Get or create the global settings."""
    global _settings
    if _settings is None:
        _settings = RandcurveSettings()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next access re-reads the environment."""
    global _settings
    _settings = None
