from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.util.errors import InvalidArgumentError
from src.util.logging import logger


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    PPR_THREADS: int | None = Field(
        None,
        ge=1,
        description="Maximum worker threads for study grids (optional, default lets the executor decide)",
    )
    PPR_QUADRATURE_NODES: int = Field(
        64,
        ge=8,
        le=64,
        description="Gauss-Legendre nodes used for continuous PPR truths",
    )
    LOG_LEVEL: str = Field("INFO", description="Logging level")
    LOG_DIR: str | None = Field(
        None, description="Directory for a log file in addition to stderr (optional)"
    )


def get_settings() -> Settings:
    try:
        return Settings()
    except ValidationError as exc:
        logger.error("Environment validation error: %s", exc)
        # Fail fast so a bad PPR_THREADS never reaches the study runner
        raise InvalidArgumentError(f"Environment validation error:\n{exc}") from exc
