from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

BASE_DIR = Path(__file__).resolve().parents[2]
DEFAULT_OUTPUT_DIR = BASE_DIR / "runs"

# numerical defaults shared across modules
MEMBERSHIP_TOL = 1e-9
GROWTH_TOL = 0.05
SOLVER_RTOL = 1e-10
MAX_DYADIC_DEPTH = 48


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="QHX_", env_file=".env", extra="ignore")

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    output_dir: Path = DEFAULT_OUTPUT_DIR
    log_level: str = "INFO"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
