"""
Config Parser Module for rf-SQUID Escape Simulator
Handles the line-based sweep configuration format and its validation.

Format: one `section.key = value` per line. `#` at line start or after whitespace starts a
comment. SI units per key:
  device.beta_L [-], device.L [H], device.C [F], device.R_eff [ohm], device.T [K]
  sweep.phi_x_min, sweep.phi_x_max [-] or auto, sweep.n_points, sweep.seed_phi_x [-] or auto,
  sweep.left_level, sweep.workers
  drive.nu [Hz] (comma list), drive.I_amp [A] or auto
  output.csv, output.svg (paths)
  validate.oracle_grid, validate.level_tol [hbar*Omega_p], validate.gap_tol, validate.element_tol,
  validate.element_points, validate.harmonic_tol, validate.gap_lambdas (comma list)
"""

import logging
import re
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src import global_vars
from src.device_potential import MAX_BETA_L, DeviceParams
from src.errors import ConfigError

logger = logging.getLogger(__name__)

AUTO = "auto"
COMMENT = re.compile(r"(?:^|\s)#")  # a "#" inside a value, e.g. a path, is kept


class DeviceSection(BaseModel):
    """Represents the device block of a sweep config."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    beta_L: float = Field(ge=0.0, lt=MAX_BETA_L)
    L: float = Field(gt=0.0)  # henry
    C: float = Field(gt=0.0)  # farad
    R_eff: float = Field(default=global_vars.DEFAULT_R_EFF, gt=0.0)  # ohm
    T: float = Field(default=global_vars.DEFAULT_TEMPERATURE, ge=0.0)  # kelvin


class SweepSection(BaseModel):
    """Represents the bias grid and crossing search settings."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    phi_x_min: Optional[float] = None  # None means auto
    phi_x_max: Optional[float] = None
    n_points: int = Field(default=global_vars.SWEEP_POINTS, ge=2)
    seed_phi_x: Optional[float] = None
    left_level: int = Field(default=1, ge=1)
    workers: int = Field(default=global_vars.WORKERS, ge=1)

    @model_validator(mode="after")
    def check_range(self) -> "SweepSection":
        if (self.phi_x_min is None) != (self.phi_x_max is None):
            raise ValueError("phi_x_min and phi_x_max must both be numbers or both be auto")
        if self.phi_x_min is not None and not self.phi_x_min < self.phi_x_max:
            raise ValueError(f"phi_x_min={self.phi_x_min} must be below phi_x_max={self.phi_x_max}")
        return self


class DriveSection(BaseModel):
    """Represents the microwave drive."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    nu: List[float]  # hertz
    I_amp: Optional[float] = Field(default=None, ge=0.0)  # ampere, None means auto

    @field_validator("nu")
    @classmethod
    def check_frequencies(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one frequency is required")
        if any(v <= 0 for v in value):
            raise ValueError("frequencies must be positive")
        return value


class OutputSection(BaseModel):
    """Represents output paths."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    csv: str = "sweep.csv"
    svg: Optional[str] = None


class ValidateSection(BaseModel):
    """Represents oracle comparison settings."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    oracle_grid: int = Field(default=global_vars.ORACLE_GRID, ge=512)
    level_tol: float = Field(default=0.05, gt=0.0)  # in units of hbar * Omega_p
    gap_tol: float = Field(default=0.30, gt=0.0)  # relative
    element_tol: float = Field(default=0.25, gt=0.0)  # relative
    element_points: int = Field(default=10, ge=2)  # bias points across the crossing
    harmonic_tol: float = Field(default=1e-6, gt=0.0)  # relative
    gap_lambdas: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0])


class SweepConfig(BaseModel):
    """Represents a complete, validated sweep configuration."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    device: DeviceSection
    sweep: SweepSection = Field(default_factory=SweepSection)
    drive: DriveSection
    output: OutputSection = Field(default_factory=OutputSection)
    validate_: ValidateSection = Field(default_factory=ValidateSection, alias="validate")

    def device_params(self, phi_x: float = 0.0, nu: float = 0.0, I_amp: float = 0.0) -> DeviceParams:
        """DeviceParams for one bias point and drive."""
        d = self.device
        return DeviceParams(beta_L=d.beta_L, L=d.L, C=d.C, R_eff=d.R_eff, T=d.T,
                            phi_x=phi_x, nu=nu, I_amp=I_amp).validate()

    def with_overrides(self, nu: Optional[List[float]] = None, points: Optional[int] = None,
                       r_eff: Optional[float] = None, seed_phi_x: Optional[float] = None,
                       out: Optional[str] = None) -> "SweepConfig":
        """
        Apply command-line overrides and validate the result again.

        Args:
            nu: replacement frequency list in Hz
            points: replacement number of sweep points
            r_eff: replacement shunt resistance in ohm
            seed_phi_x: replacement crossing seed
            out: replacement CSV path

        Returns:
            New SweepConfig
        """
        data = self.model_dump(by_alias=True)
        if nu:
            data["drive"]["nu"] = list(nu)
        if points is not None:
            data["sweep"]["n_points"] = points
        if r_eff is not None:
            data["device"]["R_eff"] = r_eff
        if seed_phi_x is not None:
            data["sweep"]["seed_phi_x"] = seed_phi_x
        if out is not None:
            data["output"]["csv"] = out
        try:
            return SweepConfig.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"{key}: {first['msg']}", key=key) from e


LIST_KEYS = {"drive.nu", "validate.gap_lambdas"}
AUTO_KEYS = {"sweep.phi_x_min", "sweep.phi_x_max", "sweep.seed_phi_x", "drive.I_amp"}


def _convert(key: str, raw: str) -> Any:
    if key in AUTO_KEYS and raw.lower() == AUTO:
        return None
    if key in LIST_KEYS:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def _split_lines(text: str) -> Tuple[Dict[str, Dict[str, Any]], Dict[str, int]]:
    sections: Dict[str, Dict[str, Any]] = {}
    lines: Dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = COMMENT.split(line, maxsplit=1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"expected 'section.key = value', got {content!r}", line=number)
        key, raw = (part.strip() for part in content.split("=", 1))
        if key.count(".") != 1 or not all(key.split(".")):
            raise ConfigError(f"key {key!r} must look like section.name", line=number, key=key)
        if not raw:
            raise ConfigError(f"empty value for {key}", line=number, key=key)
        if key in lines:
            raise ConfigError(f"duplicate key {key} (first on line {lines[key]})", line=number, key=key)
        section, name = key.split(".")
        sections.setdefault(section, {})[name] = _convert(key, raw)
        lines[key] = number
    return sections, lines


def parse_config(text: str) -> SweepConfig:
    """
    Parse and validate a sweep configuration.

    Args:
        text: contents of a config file

    Returns:
        SweepConfig with every default filled in

    Raises:
        ConfigError: on syntax errors, unknown or missing keys and out-of-range values
    """
    sections, lines = _split_lines(text)
    try:
        config = SweepConfig.model_validate(sections)
    except ValidationError as e:
        first = e.errors()[0]
        loc = [str(part) for part in first["loc"]]
        key = ".".join(loc[:2]) if len(loc) >= 2 else (loc[0] if loc else "")
        line = lines.get(key, next((n for k, n in lines.items() if k.startswith(key + ".")), None))
        if first["type"] == "missing":
            message = f"missing required key {key}"
        elif first["type"] == "extra_forbidden":
            message = f"unknown key {key}"
        else:
            message = f"{key}: {first['msg']}"
        raise ConfigError(message, line=line, key=key) from e
    logger.debug(f"config parsed: {len(lines)} keys")
    return config


def load_config(path: str) -> SweepConfig:
    """Read and parse a config file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text)
