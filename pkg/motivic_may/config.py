"""Run configuration: defaults, optional config.json, environment, CLI flags."""

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

import psutil
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from motivic_may.errors import ConfigError

PACKAGE_DIR = Path(__file__).resolve().parent
DEFAULT_DATASET_DIR = PACKAGE_DIR / "data"
CACHE_ENV_VAR = "MOTIVIC_MAY_CACHE"


def default_workers() -> int:
    """Physical core count, or 1 when psutil cannot tell."""
    return psutil.cpu_count(logical=False) or 1


class ProfileBounds(BaseModel):
    """Default truncation for one profile."""

    s_max: int = Field(ge=0)
    f_max: int = Field(ge=1)
    through: int = Field(default=34, ge=1)


def _default_bounds() -> Dict[str, ProfileBounds]:
    return {
        "motivic": ProfileBounds(s_max=40, f_max=24, through=34),
        "classical": ProfileBounds(s_max=20, f_max=12, through=34),
        "a3": ProfileBounds(s_max=24, f_max=8, through=2),
        "a3-h1local": ProfileBounds(s_max=70, f_max=1, through=34),
    }


class Settings(BaseModel):
    """Validated settings for one invocation."""

    cache_dir: Path = Path(".may-cache")
    dataset_dir: Path = DEFAULT_DATASET_DIR
    workers: int = Field(default_factory=default_workers, ge=1)
    strict: bool = True
    check_well_defined: bool = True
    check_completeness: bool = True
    log_level: str = "INFO"
    t_max: int = Field(default=34, ge=0)
    profiles: Dict[str, ProfileBounds] = Field(default_factory=_default_bounds)

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR"}:
            raise ValueError(f"unknown log level {value!r}")
        return value

    def bounds_for(self, profile: str) -> ProfileBounds:
        try:
            return self.profiles[profile]
        except KeyError:
            raise ConfigError(f"no bounds configured for profile {profile!r}")


def load_settings(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Settings:
    """Merge defaults, the config file, ``MOTIVIC_MAY_CACHE`` and CLI overrides."""
    load_dotenv()
    data: Dict[str, Any] = {}
    if config_path:
        try:
            with open(config_path, "r") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
    env_cache = os.getenv(CACHE_ENV_VAR)
    if env_cache:
        data["cache_dir"] = env_cache
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    try:
        return Settings(**data)
    except ValidationError as exc:
        raise ConfigError("invalid configuration", errors=[
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]} for err in exc.errors()
        ])
