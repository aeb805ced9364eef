# univoque/config.py
import os
from functools import lru_cache
from multiprocessing import cpu_count

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

ENV_PREFIX = 'UNIVOQUE_'


class Settings(BaseModel):
    """
    Runtime knobs. Every field can be overridden by an UNIVOQUE_<FIELD> environment
    variable or a .env file in the working directory.
    """

    state_cap: int = Field(default=2 ** 22, ge=1)
    count_budget: int = Field(default=2 * 10 ** 8, ge=1)
    min_width_bits: int = Field(default=256, ge=8)
    compare_depth: int = Field(default=512, ge=16)
    log_precision: int = Field(default=113, ge=53)
    power_iterations: int = Field(default=4000, ge=10)
    parallel_threshold: int = Field(default=16, ge=1)
    max_workers: int = Field(default_factory=lambda: min(cpu_count(), 8), ge=1)
    log_level: str = 'INFO'

    @field_validator('log_level')
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ValueError(f'unknown log level {value}')
        return value


def _from_environment() -> dict:
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(ENV_PREFIX + name.upper())
        if raw is not None and raw != '':
            values[name] = raw
    return values


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    load_dotenv()
    return Settings(**_from_environment())


def reload_settings() -> Settings:
    get_settings.cache_clear()
    return get_settings()
