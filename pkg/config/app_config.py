from typing import Optional
from pydantic import Field, PositiveInt
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Runtime
    ENVIRONMENT: str = Field(default="development")
    LOG_LEVEL: str = Field(default="INFO")
    MAX_WORKERS: PositiveInt = Field(default=4)
    TOOL_VERSION: str = Field(default="0.3.0")

    # Numerical floors
    DET_FLOOR: float = Field(default=1e-12, gt=0)
    HYPOTHESIS_FLOOR: float = Field(default=1e-8, gt=0)
    SPREAD_FLOOR: float = Field(default=1e-12, gt=0)

    # Tolerances
    DEFAULT_TOLERANCE: float = Field(default=1e-6, gt=0)
    ISO_TOLERANCE: float = Field(default=1e-9, gt=0)
    FIND_ISO_TOLERANCE: float = Field(default=1e-8, gt=0)
    ORACLE_RTOL: float = Field(default=1e-8, gt=0)
    ORACLE_ATOL: float = Field(default=1e-10, gt=0)
    EXCLUSION_LIMIT: float = Field(default=0.5, gt=0, le=1)

    # Curvature cache
    CACHE_SIZE: int = Field(default=256, ge=0)

    # Observability
    METRICS_PORT: Optional[int] = Field(default=None, gt=0, le=65535)
    TRACING_ENABLED: bool = Field(default=False)

    # Config
    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="allow"
    )


settings = Settings()
