"""Configuration management for the bicomplex engine."""

from functools import lru_cache
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Engine settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"
    log_format: Literal["text", "json"] = "text"

    # Algebra
    jet_cap: int = Field(default=8, description="Maximal jet order before a computation is aborted")
    nilpotency_slack: int = 2  # extra iterations allowed on top of the degree bound

    # Sampling
    default_seed: int = 0
    default_samples: int = 20
    max_arity: int = 4
    hpl_sample_count: int = 50

    # Reports
    report_format: Literal["text", "json"] = "text"
    report_timings: bool = False

    # Monitoring
    enable_metrics: bool = True

    @field_validator("jet_cap")
    @classmethod
    def validate_jet_cap(cls, v: int) -> int:
        """Ensure the jet cap leaves room for at least one total derivative."""
        if v < 1:
            raise ValueError("Jet cap must be at least 1")
        return v

    @field_validator("max_arity")
    @classmethod
    def validate_max_arity(cls, v: int) -> int:
        """Generalized Jacobi identities are only enumerated up to arity 4."""
        if not 1 <= v <= 4:
            raise ValueError("Maximal arity must be between 1 and 4")
        return v

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v):
        """Accept lower-case level names."""
        if isinstance(v, str):
            return v.upper()
        return v

    @property
    def is_json_logging(self) -> bool:
        """Check if logs are emitted as JSON lines."""
        return self.log_format == "json"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


# Global settings instance for convenience
settings = get_settings()
