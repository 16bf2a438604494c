"""Application settings loaded from environment and .env."""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Configuration for logging, worker count and output locations."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = Field(
        default="INFO",
        alias="LOG_LEVEL",
        description="Logging level (DEBUG, INFO, WARNING, ERROR)",
    )
    threads: int = Field(
        default=1,
        ge=1,
        alias="VWLAB_THREADS",
        description="Upper bound on worker threads used by the oracles",
    )
    output_dir: Path = Field(
        default=Path("reports"),
        alias="VWLAB_OUTPUT_DIR",
        description="Directory for reports when --out is a bare name",
    )
    log_dir: Path | None = Field(
        default=None,
        alias="VWLAB_LOG_DIR",
        description="Directory for dated log files; stderr only when unset",
    )
