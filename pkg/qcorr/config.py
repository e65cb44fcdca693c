"""YAML run configuration supplying defaults for command-line flags."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .constants import (
    DEFAULT_EPS,
    DEFAULT_MAX_DIM,
    DEFAULT_N,
    DEFAULT_ORDER,
    DEFAULT_POINTS,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    DEFAULT_WORKERS,
)
from .powseries import DEFAULT_MAX_ORDER

logger = logging.getLogger(__name__)


class RunSettings(BaseModel):
    """Flag defaults; an explicit flag always wins over these."""

    model_config = ConfigDict(extra="forbid")

    protocol: Optional[str] = None
    k: Optional[int] = Field(default=None, ge=0)
    rho: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    n: int = Field(default=DEFAULT_N, ge=1)
    points: int = Field(default=DEFAULT_POINTS, ge=1)
    trials: int = Field(default=DEFAULT_TRIALS, ge=0)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    order: int = Field(default=DEFAULT_ORDER, ge=1, le=DEFAULT_MAX_ORDER)
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)
    max_dim: int = Field(default=DEFAULT_MAX_DIM, ge=2)
    truncation: Optional[int] = Field(default=None, ge=1)
    source: str = "explicit"
    eps: List[float] = Field(default_factory=lambda: list(DEFAULT_EPS))

    @field_validator("order")
    @classmethod
    def _odd_order(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("order must be odd")
        return value

    @field_validator("eps")
    @classmethod
    def _eps_range(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("eps needs at least one value")
        for value in values:
            if not 0.0 < value <= 1.0:
                raise ValueError(f"eps values must lie in (0, 1], got {value}")
        return values


def load_settings(path: Optional[Path]) -> RunSettings:
    if path is None:
        return RunSettings()
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path} must be a YAML mapping/object")
    settings = RunSettings.model_validate(data)
    logger.debug("loaded run settings from %s: %s", path, settings.model_dump(exclude_defaults=True))
    return settings


def merge_flags(settings: RunSettings, flags: dict) -> RunSettings:
    """Overlay flags that were given explicitly (not ``None``) onto ``settings``."""
    given = {key: value for key, value in flags.items() if value is not None and key in RunSettings.model_fields}
    return RunSettings.model_validate({**settings.model_dump(), **given})
