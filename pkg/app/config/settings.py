import os
from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict


# Validating loading by checking file existence
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
env_path = os.path.join(BASE_DIR, ".env")
if os.path.exists(env_path):
    load_dotenv(env_path)
else:
    load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="QCLOCK_", extra="ignore")

    # Paths
    OUTPUT_DIR: str = os.path.join(BASE_DIR, "results")

    # Logging
    LOG_LEVEL: str = "INFO"
    PROGRESS_BAR: bool = False

    # Drive defaults
    WAVELENGTH_NM: float = 698.4
    RABI_FREQUENCY_HZ: float = 2500.0

    # Movement timing (microseconds)
    MIN_SHIFT_TIME_US: float = 20.0
    SHIFT_TIME_US: float = 32.0
    JITTER_PAD_US: float = 34.0

    # One fit time unit expressed in sequence time (1 ms)
    FIT_TIME_UNIT_US: float = 1000.0

    # Estimation
    FOLD_IMAGE_TOLERANCE: float = 1e-12
    FOLD_MAX_IMAGES: int = 64
    MIN_FOLDED_SAMPLES: int = 50
    QPN_TRIALS: int = 20000

    # Self-test
    SELFTEST_SHOTS: int = 200
    SELFTEST_SEED: int = 20240611


settings = Settings()
