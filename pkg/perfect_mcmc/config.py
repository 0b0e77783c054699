import os
from functools import lru_cache
from typing import Dict, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


ENV_PREFIX = "PERFECT_MCMC_"


class Settings(BaseModel):
    """Caps and knobs shared by every module.

    :param enum_cap: max number of terms an exact enumeration may visit
    :param label_cap: max number of labels of a materialized transition rule
    :param downset_cap: max number of down-sets enumerated by a monotonicity check
    :param soundness_cap: max number of driving sequences a soundness check visits
    :param mtf_max_records: largest list length accepted by `mtf_chain`
    :param read_once_max_blocks: block cap of read-once CFTP runs
    :param log_level: level the command line hands to `logging.basicConfig`
    """
    model_config = ConfigDict(frozen=True)

    enum_cap: int = Field(10 ** 7, gt=0)
    label_cap: int = Field(10 ** 6, gt=0)
    downset_cap: int = Field(2 ** 20, gt=0)
    soundness_cap: int = Field(10 ** 6, gt=0)
    mtf_max_records: int = Field(5, gt=0)
    read_once_max_blocks: int = Field(10 ** 4, gt=1)
    log_level: str = "WARNING"

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value!r}")
        return value

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        environ = os.environ if environ is None else environ
        values: Dict[str, str] = {}
        for name in cls.model_fields:
            key = ENV_PREFIX + name.upper()
            if key in environ:
                values[name] = environ[key]
        return cls(**values)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()


def resolve_cap(cap: Optional[int], name: str) -> int:
    """Explicit `cap` argument if given, else the configured value of `name`"""
    if cap is not None:
        return cap
    return getattr(get_settings(), name)
