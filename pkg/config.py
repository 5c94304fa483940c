"""
Run configuration.

Precedence: command-line flags > config file (flat KEY=VALUE) > WPD_* environment
variables (a .env next to this file is loaded) > defaults.
"""
from __future__ import annotations
from typing import Any, Dict, Literal, Mapping, Optional, Tuple
from pathlib import Path
import logging
import os

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigError
from models import REGIONS, parse_week

env_path = Path(__file__).resolve().parent / ".env"
load_dotenv(dotenv_path=env_path)

logger = logging.getLogger(__name__)

ENV_PREFIX = "WPD_"
# d and D collide once upper-cased
ENV_NAMES = {"d": "WPD_DIFF", "D": "WPD_SEASONAL_DIFF"}


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seasonal_period: int = Field(default=52, ge=1)
    max_order_sum: int = Field(default=5, ge=0)
    confidence_level: float = Field(default=0.99, gt=0, lt=1)
    aggregation_mode: Literal["sum", "max"] = "sum"
    seed: int = 0

    # training ends at train_end; the next test_len weeks are held out
    train_end: str = "2016-W52"
    test_len: int = Field(default=52, ge=1)
    horizon: int = Field(default=52, ge=1)
    future_exog: Literal["observed", "climatology"] = "observed"
    regions: Tuple[str, ...] = REGIONS

    # Manual overrides; None means automatic
    d: Optional[int] = Field(default=None, ge=0, le=2)
    D: Optional[int] = Field(default=None, ge=0, le=1)
    include_intercept: Optional[bool] = None

    joint_search: bool = False
    workers: int = Field(default=1, ge=1)
    kpss_seasonal_threshold: float = 0.5
    kpss_lags: Optional[int] = Field(default=None, ge=0)
    acf_band_z: float = Field(default=1.96, gt=0)
    diagnostic_lags: int = Field(default=52, ge=1)
    slow_stage_seconds: float = 30.0

    # Paths
    out_dir: str = "out"
    demand_path: Optional[str] = None
    env_path: Optional[str] = None
    dataset_path: Optional[str] = None

    @field_validator("train_end")
    @classmethod
    def _valid_week(cls, v):
        parse_week(v)
        return v

    @field_validator("regions", mode="before")
    @classmethod
    def _split_regions(cls, v):
        if isinstance(v, str):
            v = [r for r in v.replace(";", ",").split(",") if r.strip()]
        return tuple(r.strip().upper() for r in v)

    @model_validator(mode="after")
    def _known_regions(self):
        unknown = [r for r in self.regions if r not in REGIONS]
        if unknown:
            raise ValueError(f"unknown regions: {', '.join(unknown)}")
        return self


FIELD_NAMES = tuple(RunConfig.model_fields.keys())


def _from_environment() -> Dict[str, Any]:
    values = {}
    for name in FIELD_NAMES:
        raw = os.getenv(ENV_NAMES.get(name, f"{ENV_PREFIX}{name.upper()}"))
        if raw is not None and raw != "":
            values[name] = raw
    return values


def _file_key(key: str) -> str:
    key = key.strip()
    if key in FIELD_NAMES:
        return key
    for name, env_name in ENV_NAMES.items():
        if key.upper() == env_name:
            return name
    name = key.lower()
    if name.startswith(ENV_PREFIX.lower()):
        name = name[len(ENV_PREFIX):]
    return name


def _from_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    if not Path(path).exists():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for key, raw in dotenv_values(path).items():
        name = _file_key(key)
        if name not in FIELD_NAMES:
            raise ConfigError(f"unknown config key '{key}' in {path}")
        if raw is not None and raw != "":
            values[name] = raw
    return values


def load_config(flags: Optional[Mapping[str, Any]] = None, config_file: Optional[str] = None) -> RunConfig:
    """Merge the configuration layers into a validated RunConfig."""
    merged: Dict[str, Any] = {}
    merged.update(_from_environment())
    merged.update(_from_file(config_file))
    merged.update({k: v for k, v in (flags or {}).items() if v is not None})
    try:
        config = RunConfig(**merged)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "config"
        raise ConfigError(f"invalid configuration for '{where}': {first.get('msg')}") from e
    logger.debug(f"Loaded config: {config.model_dump()}")
    return config
