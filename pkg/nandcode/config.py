"""Configuration management for WER sweeps."""

import configparser
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from nandcode.ecc import ECC_PRESETS, NO_ECC
from nandcode.exceptions import ConfigError
from nandcode.pipeline import SCHEME_PRESETS

logger = logging.getLogger(__name__)

DEFAULT_GAMMA_GRID = [0.0, 0.1, 0.2, 0.3, 0.35, 0.4, 0.45, 0.5]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_flag(value: str) -> bool:
    """Parse on/off style booleans."""
    lowered = value.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"Expected on/off, got {value!r}")


class RunSpec(BaseModel):
    """One curve of a sweep: a scheme preset with its ECC and interleaver."""

    label: str
    scheme: str
    ecc: str = NO_ECC
    interleave: bool = False

    @field_validator("scheme")
    @classmethod
    def _known_scheme(cls, value: str) -> str:
        if value not in SCHEME_PRESETS:
            raise ValueError(f"Unknown scheme preset {value!r}")
        return value

    @field_validator("ecc")
    @classmethod
    def _known_ecc(cls, value: str) -> str:
        if value != NO_ECC and value not in ECC_PRESETS:
            raise ValueError(f"Unknown ECC preset {value!r}")
        return value


class ChannelSettings(BaseModel):
    """Evenly spaced Gaussian levels plus the fixed y/diagonal coupling."""

    e_mean: float = -1.0
    spacing: float = Field(default=2.0, gt=0)
    sigma: float = Field(default=0.25, gt=0)
    gamma_y: float = Field(default=0.0, ge=0)
    gamma_xy: float = Field(default=0.0, ge=0)


def _default_runs() -> List[RunSpec]:
    return [
        RunSpec(label="conv-r0.9", scheme="slc-conv", ecc="conv-9/10"),
        RunSpec(label="conv-r0.5", scheme="slc-conv", ecc="conv-1/2"),
        RunSpec(label="conv-r0.5-il", scheme="slc-conv", ecc="conv-1/2", interleave=True),
        RunSpec(label="mod-r0.5", scheme="slc-rll", ecc="mod-3/4"),
        RunSpec(label="mod-r0.5-il", scheme="slc-rll", ecc="mod-3/4", interleave=True),
    ]


class SweepConfig(BaseModel):
    """Configuration of a WER sweep over the effective x coupling."""

    runs: List[RunSpec] = Field(default_factory=_default_runs)
    gamma_x_star: List[float] = Field(default_factory=lambda: list(DEFAULT_GAMMA_GRID))
    trials: int = Field(default=1000, ge=1)
    rows: int = Field(default=1, ge=1)
    codewords_per_page: int = Field(default=16, ge=1)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    channel: ChannelSettings = Field(default_factory=ChannelSettings)
    out: Optional[Path] = None

    @field_validator("gamma_x_star")
    @classmethod
    def _increasing_grid(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("gamma_x_star grid must not be empty")
        if any(g < 0 for g in value):
            raise ValueError("gamma_x_star values must be non-negative")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("gamma_x_star grid must be strictly increasing")
        return value

    @field_validator("runs")
    @classmethod
    def _unique_labels(cls, value: List[RunSpec]) -> List[RunSpec]:
        if not value:
            raise ValueError("A sweep needs at least one run")
        labels = [run.label for run in value]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Run labels must be unique: {labels}")
        return value


def validate_config(data: Dict[str, Any]) -> SweepConfig:
    """Build a SweepConfig, turning validation failures into ConfigError."""
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep configuration: {e}") from e


def with_overrides(config: SweepConfig, **updates: Any) -> SweepConfig:
    """Copy of ``config`` with the non-None updates applied and revalidated."""
    data = config.model_dump()
    data.update({key: value for key, value in updates.items() if value is not None})
    return validate_config(data)


def _read_ini(path: str) -> Dict[str, Any]:
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as f:
        parser.read_file(f)

    data: Dict[str, Any] = {}
    if parser.has_section("sweep"):
        sweep = parser["sweep"]
        for key in ("trials", "rows", "codewords_per_page", "seed", "workers"):
            if key in sweep:
                data[key] = int(sweep[key])
        if "gamma_x_star" in sweep:
            data["gamma_x_star"] = [float(g) for g in sweep["gamma_x_star"].split(",") if g.strip()]
        if "out" in sweep:
            data["out"] = sweep["out"]
    if parser.has_section("channel"):
        data["channel"] = {key: float(value) for key, value in parser["channel"].items()}

    runs = []
    for section in parser.sections():
        if not section.startswith("run."):
            continue
        run = parser[section]
        runs.append(
            {
                "label": section[len("run."):],
                "scheme": run.get("scheme", ""),
                "ecc": run.get("ecc", NO_ECC),
                "interleave": parse_flag(run.get("interleave", "off")),
            }
        )
    if runs:
        data["runs"] = runs
    return data


def load_config(path: Optional[str] = None) -> SweepConfig:
    """Load configuration from file and environment variables.

    Args:
        path: INI file to read; defaults to ``NANDCODE_CONFIG_FILE``.

    Returns:
        The validated sweep configuration.
    """
    data: Dict[str, Any] = {}

    # Load from config file if specified
    config_file = path or os.getenv("NANDCODE_CONFIG_FILE")
    if config_file and os.path.exists(config_file):
        try:
            data = _read_ini(config_file)
        except (configparser.Error, IOError, ValueError) as e:
            logger.warning(f"Failed to load config file: {e}")
            data = {}
    elif config_file:
        logger.warning(f"Config file not found: {config_file}")

    # Override with environment variables if set
    if os.getenv("NANDCODE_SEED"):
        data["seed"] = int(os.getenv("NANDCODE_SEED", "0"))
    if os.getenv("NANDCODE_TRIALS"):
        data["trials"] = int(os.getenv("NANDCODE_TRIALS", "1000"))
    if os.getenv("NANDCODE_WORKERS"):
        data["workers"] = int(os.getenv("NANDCODE_WORKERS", "1"))

    return validate_config(data)
