from pydantic_settings import BaseSettings, SettingsConfigDict


class TestSettings(BaseSettings):
    """Test settings: small suites, two workers to exercise the pool."""

    PROJECT_NAME: str = "Polyball Euler Characteristic Test"
    VERSION: str = "0.1.0"

    WORKERS: int = 2
    DEFAULT_QMAX: int = 3
    STABILIZATION_RUN: int = 3

    OUTPUT_FORMAT: str = "csv"
    OUTPUT_DIR: str = ""
    LOG_LEVEL: str = "DEBUG"

    EXPANSION_MAX_TERMS: int = 12
    PURITY_MAX_POWER: int = 12
    PURITY_TOL: str = "1/1000000"

    SUITE_SEED: int = 7
    SUITE_SIZE: int = 20

    model_config = SettingsConfigDict(
        env_file=".env.test",
        env_file_encoding="utf-8",
        case_sensitive=True,
    )


# Create test settings instance
test_settings = TestSettings()

# Override the main settings for tests
from app.core.config import settings

for key, value in test_settings.model_dump().items():
    setattr(settings, key, value)
