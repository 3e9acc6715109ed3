"""Settings loaded from the packaged config.yaml.

OSTEOPLAN_CONFIG points at an alternate YAML file; OSTEOPLAN_CATALOG
overrides the jig catalog path.
"""

from __future__ import annotations

import os
import pathlib
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .core import SchemaError
from .geometry import YAxisSign
from .simulation.schema import ErrorModelSpec, MethodEnum

ENV_CONFIG = "OSTEOPLAN_CONFIG"
ENV_CATALOG = "OSTEOPLAN_CATALOG"

config_file = pathlib.Path(__file__).parent.joinpath("config.yaml")


def load_config(config_path: str | pathlib.Path = config_file) -> dict[str, Any]:
    """
    Load configuration from YAML file.
    """
    with open(config_path, encoding="utf-8") as file:
        config = yaml.safe_load(file)
    return config or {}


class FrameSettings(BaseModel):
    model_config = ConfigDict(frozen=True)
    y_axis: YAxisSign = YAxisSign.RIGHT_TO_LEFT


class PlanningSettings(BaseModel):
    model_config = ConfigDict(frozen=True)
    tumor_radius: float = Field(default=25.0, gt=0)
    safety_margin: float = Field(default=5.0, ge=0)
    cut_normals: dict[str, tuple[float, float, float]] = {}


class JigSettings(BaseModel):
    model_config = ConfigDict(frozen=True)
    angle_weight: float = Field(default=1.0, gt=0)
    feasibility_limit: float = Field(default=10.0, gt=0)
    catalog: str | None = None


class RegistrationSettings(BaseModel):
    model_config = ConfigDict(frozen=True)
    marker_edge: float = Field(default=20.0, gt=0)
    fiducial_noise: float = Field(default=0.1, ge=0)
    tracking_rotation_noise: float = Field(default=0.2, ge=0)
    tracking_translation_noise: float = Field(default=0.2, ge=0)
    tracking_frames: int = Field(default=20, ge=1)
    propagate_to_guided: bool = True


class SimulationSettings(BaseModel):
    model_config = ConfigDict(frozen=True)
    kerf: float = Field(default=1.27, ge=0)
    presets: dict[MethodEnum, ErrorModelSpec] = {}


class EvaluationSettings(BaseModel):
    model_config = ConfigDict(frozen=True)
    thresholds: tuple[float, ...] = (1.0, 3.0, 5.0)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    tolerance: float = Field(default=3.0, gt=0)
    involvement: float = Field(default=5.0, gt=0)
    face_samples: int = Field(default=200, ge=0)
    face_noise: float = Field(default=0.05, ge=0)

    @field_validator("thresholds")
    @classmethod
    def sorted_thresholds(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(t <= 0 for t in value):
            raise ValueError("thresholds must be positive and non-empty")
        return tuple(sorted(value))


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)
    frame: FrameSettings = FrameSettings()
    planning: PlanningSettings = PlanningSettings()
    jig: JigSettings = JigSettings()
    registration: RegistrationSettings = RegistrationSettings()
    simulation: SimulationSettings = SimulationSettings()
    evaluation: EvaluationSettings = EvaluationSettings()

    def preset(self, method: MethodEnum | str) -> ErrorModelSpec:
        method = MethodEnum(method)
        try:
            return self.simulation.presets[method]
        except KeyError as exc:
            raise SchemaError(f"no error-model preset for {method.value}") from exc

    def catalog_path(self) -> pathlib.Path | None:
        """Jig catalog override: OSTEOPLAN_CATALOG first, then the settings file."""
        override = os.getenv(ENV_CATALOG) or self.jig.catalog
        return pathlib.Path(override) if override else None


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(config_path: str | pathlib.Path | None = None) -> Settings:
    """Packaged defaults, overlaid with config_path or $OSTEOPLAN_CONFIG when given."""
    path = config_path or os.getenv(ENV_CONFIG)
    raw = load_config(config_file)
    if path:
        try:
            raw = _merge(raw, load_config(path))
        except (OSError, yaml.YAMLError) as exc:
            raise SchemaError(f"cannot read settings file {path}: {exc}") from exc
    try:
        return Settings.model_validate(raw)
    except ValidationError as exc:
        raise SchemaError(f"invalid settings in {path}: {exc}") from exc
