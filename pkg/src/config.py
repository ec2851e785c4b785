"""
Configuration settings for the IAB planner service and CLI.
"""

import logging
from typing import List

from pydantic import ConfigDict, Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings."""

    # API Settings
    APP_NAME: str = "IAB Planner"
    APP_VERSION: str = "0.1.0"
    API_PREFIX: str = "/api"
    DEBUG: bool = False

    # Server Settings
    HOST: str = "0.0.0.0"
    PORT: int = 8000
    RELOAD: bool = False
    CORS_ORIGINS: List[str] = Field(default_factory=lambda: ["*"])

    # Data Storage
    DATA_DIR: str = "data"
    BAP_TOPOLOGY_FILE: str = "data/two_path_topology.json"
    LOG_LEVEL: str = "INFO"

    # Simulation defaults
    DEFAULT_JOBS: int = 1
    EXHAUSTIVE_CAP: int = 1_000_000
    DEFAULT_FADING_DRAWS: int = 50
    # Largest n_instances the HTTP run endpoint accepts synchronously
    API_MAX_INSTANCES: int = 5

    # Build/provenance (optional; safe defaults)
    BUILD_SHA: str = "unknown"

    model_config = ConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",  # Allow extra env vars without raising validation errors
    )

    @property
    def runs_dir(self) -> str:
        return f"{self.DATA_DIR}/runs"


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


# Create global settings instance
settings = Settings()
