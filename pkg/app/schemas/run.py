import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.config import settings
from app.core.errors import ValidationFailure
from app.schemas.params import DilationConfig, PLRates


class Mode(str, Enum):
    exact = "exact"
    dilated = "dilated"
    dilated_readout = "dilated+readout"


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


class KGrid(BaseModel):
    """Uniform grid start..stop (inclusive) or an explicit point list."""

    model_config = ConfigDict(frozen=True)

    start: float = 0.0
    stop: float = 2.0
    count: int = Field(default=21, ge=2)
    pi_units: bool = True
    points: list[float] | None = None

    @field_validator("points")
    @classmethod
    def _enough_points(cls, value: list[float] | None) -> list[float] | None:
        if value is not None and len(value) < 2:
            raise ValueError("a k grid needs at least 2 points")
        return value

    def values(self) -> np.ndarray:
        raw = np.array(self.points, dtype=float) if self.points is not None else np.linspace(self.start, self.stop, self.count)
        return raw * math.pi if self.pi_units else raw

    @classmethod
    def parse(cls, text: str) -> "KGrid":
        """Parse ``start:stop:count`` or ``k1,k2,...``; a ``pi`` suffix means units of π."""
        raw = text.strip().lower().replace("π", "pi")
        pi_units = "pi" in raw
        raw = raw.replace("pi", "")
        try:
            if ":" in raw:
                start, stop, count = raw.split(":")
                return cls(start=float(start), stop=float(stop), count=int(count), pi_units=pi_units)
            return cls(points=[float(p) for p in raw.split(",") if p.strip()], pi_units=pi_units)
        except (ValueError, ValidationError) as exc:
            raise ValidationFailure(f"bad k grid {text!r}: {exc}") from exc


class ReadoutConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    rates: PLRates = Field(default_factory=PLRates)
    shots: int = Field(default=settings.shots, ge=1)
    seed: int = settings.seed


class RunConfig(BaseModel):
    """Everything one CLI run needs; loadable from a JSON or TOML file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    v: float = 0.3
    r: float = 1.0
    gamma: float = Field(default=3.5, gt=0.0)
    k: float | None = Field(default=None, description="single momentum (radians) for evolve/compile-pulses")
    k_grid: KGrid = Field(default_factory=KGrid)
    mode: Mode = Mode.exact
    dilation: DilationConfig = Field(default_factory=DilationConfig)
    readout: ReadoutConfig = Field(default_factory=ReadoutConfig)
    psi0: tuple[float, float] = (1.0, 0.0)
    horizon: float | None = Field(default=None, gt=0.0, description="evolution time, μs; default from the decay rate")
    emulate_experiment: bool = True
    workers: int = Field(default=settings.workers, ge=1)
    out: Path | None = None
    format: OutputFormat = OutputFormat.csv
    hermitian_limit: bool = False

    @model_validator(mode="after")
    def _dilation_covers_horizon(self) -> "RunConfig":
        if self.mode is not Mode.exact and self.horizon is not None and self.horizon > self.dilation.horizon:
            raise ValueError("evolution horizon exceeds the dilation horizon")
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_mapping(load_config_file(path))

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise ValidationFailure(f"invalid run configuration: {exc}") from exc

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Merge non-None overrides (flat or nested dicts) and re-validate."""
        data = self.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **{k: v for k, v in value.items() if v is not None}}
            else:
                data[key] = value
        return type(self).from_mapping(data)

    def metadata(self) -> dict[str, Any]:
        return json.loads(self.model_dump_json())


def load_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ValidationFailure(f"config file {path} not found")
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(path.read_text(encoding="utf-8"))
        return json.loads(path.read_text(encoding="utf-8"))
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ValidationFailure(f"cannot parse {path}: {exc}") from exc
