"""Simulation documents: error model, batch manifest and trial results."""

import enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = "1.0"


class MethodEnum(str, enum.Enum):
    FREEHAND = "freehand"
    GUIDED = "guided"


class DistributionFamily(str, enum.Enum):
    GAUSSIAN = "gaussian"
    TRUNCATED_GAUSSIAN = "truncated-gaussian"
    # |x| gamma distributed with the given mean and sd, random sign
    MAGNITUDE_GAMMA = "magnitude-gamma"


class DistributionSpec(BaseModel):
    model_config = ConfigDict(frozen=True)
    mean: float = 0.0
    sd: float = Field(default=0.0, ge=0.0)
    # symmetric bound |x| <= trunc; ignored by the plain gaussian
    trunc: float | None = None

    @field_validator("trunc")
    @classmethod
    def positive_trunc(cls, value: float | None) -> float | None:
        if value is not None and value <= 0:
            raise ValueError("truncation bound must be positive")
        return value


class ErrorModelSpec(BaseModel):
    """Error-model file: {family, dt, roll, pitch}."""

    model_config = ConfigDict(frozen=True)
    family: DistributionFamily = DistributionFamily.GAUSSIAN
    dt: DistributionSpec = DistributionSpec()
    roll: DistributionSpec = DistributionSpec()
    pitch: DistributionSpec = DistributionSpec()
    seed: int = 0

    @model_validator(mode="after")
    def moments_reachable(self) -> "ErrorModelSpec":
        for name in ("dt", "roll", "pitch"):
            spec: DistributionSpec = getattr(self, name)
            if self.family is DistributionFamily.TRUNCATED_GAUSSIAN:
                if spec.trunc is not None and not -spec.trunc <= spec.mean <= spec.trunc:
                    raise ValueError(f"{name}: mean {spec.mean} outside the truncation bounds")
            elif self.family is DistributionFamily.MAGNITUDE_GAMMA and spec.sd > 0:
                if spec.mean <= 0:
                    raise ValueError(f"{name}: magnitude mean must be positive, got {spec.mean}")
                # a variable on [0, trunc] with this mean has variance below mean * (trunc - mean)
                if spec.trunc is not None and spec.sd**2 >= spec.mean * (spec.trunc - spec.mean):
                    raise ValueError(f"{name}: mean {spec.mean} and sd {spec.sd} do not fit within {spec.trunc}")
        return self


class BatchEntry(BaseModel):
    plan: str
    # None -> the run seed
    seed: int | None = None
    mesh: str | None = None
    landmarks: str | None = None


class BatchManifest(BaseModel):
    entries: list[BatchEntry]


class CutRecord(BaseModel):
    label: str
    planned_normal: list[float]
    planned_offset: float
    planned_mp: float
    achieved_normal: list[float]
    achieved_offset: float
    dt_mm: float
    droll_deg: float
    dpitch_deg: float
    kerf_mm: float
    cut_face_points: list[list[float]]


class TrialRecord(BaseModel):
    specimen_id: str
    side: str
    method: MethodEnum
    seed: int
    complete: bool
    void_labels: list[str] = []
    tumor_center: list[float]
    tumor_radius: float
    safety_margin: float
    frame: dict[str, list[float]]
    cuts: list[CutRecord]


class TrialResultsDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: str = "trial-results"
    method: MethodEnum
    kerf_mm: float
    error_model: ErrorModelSpec
    trials: list[TrialRecord]

    @field_validator("kind")
    @classmethod
    def expected_kind(cls, value: str) -> str:
        if value != "trial-results":
            raise ValueError(f"expected a trial-results document, got {value!r}")
        return value
