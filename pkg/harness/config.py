"""
Configuration settings for the competition harness.
Uses pydantic_settings to load configuration from environment variables and a
flat dotted-key config file.

Precedence, highest first: command-line overrides, config file, environment
(``HARNESS_`` prefix, ``__`` as nested delimiter), defaults.
"""
import hashlib
import json
from datetime import date
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from harness.exceptions import ConfigurationError
from harness.model import CovarianceSpec, CylinderSpec, DesignGrid, SynthConfig, WeightSpec
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)


class PathSettings(BaseModel):
    """Where stages read and write their artifacts."""
    model_config = ConfigDict(extra="forbid")

    workdir: Path = Path("work")


class MaskSettings(BaseModel):
    """Month-wise missing-data masks."""
    model_config = ConfigDict(extra="forbid")

    alpha_early: float = Field(default=0.20, ge=0.0, le=1.0)  # missing fraction before split_date
    alpha_late: float = Field(default=0.60, ge=0.0, le=1.0)   # missing fraction from split_date on
    split_date: date = date(2007, 1, 1)
    cov: CovarianceSpec = CovarianceSpec()


class ValidationSettings(BaseModel):
    """Held-out validation points drawn from the masked cells."""
    model_config = ConfigDict(extra="forbid")

    n_per_day: int = Field(default=50, gt=0)
    days_of_month: List[int] = [5, 15, 25]
    period_start: Optional[date] = None  # defaults to mask.split_date
    period_end: Optional[date] = None    # defaults to the last calendar day
    reuse_locations_within_month: bool = False

    @field_validator("days_of_month", mode="before")
    @classmethod
    def _split_days(cls, value):
        if isinstance(value, str):
            return [int(part) for part in value.split(",") if part.strip()]
        return value

    @field_validator("days_of_month")
    @classmethod
    def _check_days(cls, value):
        if not value or any(day < 1 or day > 31 for day in value):
            raise ValueError(f"days_of_month must be a nonempty list of days in 1..31, got {value}")
        return sorted(set(value))


class BoundsSettings(BaseModel):
    """Physical bounds every finite field value must respect (degC)."""
    model_config = ConfigDict(extra="forbid")

    temperature_min: float = -10.0
    temperature_max: float = 50.0
    anomaly_min: float = -10.0
    anomaly_max: float = 10.0


class Settings(BaseSettings):
    """
    Run configuration of the harness.
    Default values reproduce the competition's design at desk scale.
    """
    seed: int = 2019              # master seed; every stream derives from it
    threads: int = Field(default=1, ge=1)  # intra-stage worker threads

    paths: PathSettings = PathSettings()
    synth: SynthConfig = SynthConfig()
    mask: MaskSettings = MaskSettings()
    validation: ValidationSettings = ValidationSettings()
    cylinder: CylinderSpec = CylinderSpec()
    weight: WeightSpec = WeightSpec()
    design: DesignGrid = DesignGrid()
    bounds: BoundsSettings = BoundsSettings()

    model_config = SettingsConfigDict(
        env_prefix="HARNESS_",
        env_nested_delimiter="__",
        extra="forbid",
    )


def parse_config_file(path) -> Dict[str, str]:
    """
    Read a flat ``key = value`` config file.

    Blank lines and lines starting with ``#`` are ignored; keys are dotted
    paths into :class:`Settings` (``mask.cov.range_km = 300``).

    Args:
        path: location of the config file

    Returns:
        Mapping of dotted key to raw string value, in file order

    Raises:
        ConfigurationError: If the file cannot be read or a line is malformed
    """
    logger.debug(f"Reading config file {path}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot read config file {path}: {e}")
        raise ConfigurationError(f"cannot read config file {path}: {e}") from e

    entries = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
        entries[key.strip()] = value.strip()
    logger.info(f"Loaded {len(entries)} settings from {path}")
    return entries


def nest_keys(flat: Dict[str, object]) -> Dict[str, object]:
    """Turn ``{"mask.cov.family": v}`` into ``{"mask": {"cov": {"family": v}}}``."""
    nested = {}
    for dotted, value in flat.items():
        parts = dotted.split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"key {dotted!r} conflicts with scalar key {part!r}")
            node = child
        node[parts[-1]] = value
    return nested


def load_settings(config_path=None, overrides: Optional[Dict[str, object]] = None) -> Settings:
    """
    Resolve the run configuration.

    Args:
        config_path: optional flat dotted-key config file
        overrides: dotted-key values from the command line; they win over the file

    Returns:
        Validated Settings instance

    Raises:
        ConfigurationError: If a key is unknown or a value does not validate
    """
    flat = parse_config_file(config_path) if config_path else {}
    flat.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        settings = Settings(**nest_keys(flat))
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        raise ConfigurationError(f"invalid configuration: {e}") from e
    logger.debug(f"Resolved settings: {settings.model_dump(mode='json')}")
    return settings


def config_hash(settings: Settings) -> str:
    """
    SHA-256 of the canonical JSON form of the settings.

    ``threads`` and ``paths`` are left out: they never change a stage's output.
    """
    payload = settings.model_dump(mode="json", exclude={"threads", "paths"})
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
