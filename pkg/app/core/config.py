from typing import Literal
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    PROJECT_NAME: str = "Polyball Euler Characteristic"
    VERSION: str = "1.0.0"

    # Evaluation
    WORKERS: int = 1
    DEFAULT_QMAX: int = 3
    STABILIZATION_RUN: int = 3

    # Reports
    OUTPUT_FORMAT: Literal["csv", "json"] = "csv"
    OUTPUT_DIR: str = ""
    LOG_LEVEL: str = "WARNING"

    # Constructions
    EXPANSION_MAX_TERMS: int = 12

    # Purity diagnostics (bounded-power decay, never a certificate)
    PURITY_MAX_POWER: int = 16
    PURITY_TOL: str = "1/1000000"

    # Numeric mode (approximate path only)
    NUMERIC_RANK_TOL: float = 1e-10
    NUMERIC_COND_LIMIT: float = 1e12

    # Verification suite
    SUITE_SEED: int = 20240229
    SUITE_SIZE: int = 20

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
    )


settings = Settings()
