"""Plan file: {specimen_id, side, tumor:{center, r, margin}, cuts:[{label, normal, offset, mp}], pattern_pose}."""

from __future__ import annotations

from pathlib import Path

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..core import PlanError, SchemaError
from ..geometry import Plane, RigidTransform, Sphere
from .model import CutLabel, PlannedCut, ResectionPlan, Side, TumorModel

SCHEMA_VERSION = "1.0"


class TumorDocument(BaseModel):
    center: list[float] = Field(min_length=3, max_length=3)
    r: float = Field(gt=0)
    margin: float = Field(ge=0)


class CutDocument(BaseModel):
    label: CutLabel
    normal: list[float] = Field(min_length=3, max_length=3)
    offset: float
    mp: float

    @field_validator("normal")
    @classmethod
    def unit_normal(cls, value: list[float]) -> list[float]:
        norm = sum(v * v for v in value) ** 0.5
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"cut normal must be unit length, got |n| = {norm}")
        return value


class PoseDocument(BaseModel):
    quaternion_xyzw: list[float] = Field(min_length=4, max_length=4)
    translation: list[float] = Field(min_length=3, max_length=3)


class PlanDocument(BaseModel):
    model_config = ConfigDict(use_enum_values=False)
    schema_version: str = SCHEMA_VERSION
    specimen_id: str
    side: Side
    tumor: TumorDocument
    cuts: list[CutDocument]
    pattern_pose: PoseDocument | None = None


def plan_to_document(plan: ResectionPlan) -> PlanDocument:
    return PlanDocument(
        specimen_id=plan.specimen_id,
        side=plan.side,
        tumor=TumorDocument(
            center=[float(v) for v in plan.tumor.center], r=plan.tumor.radius, margin=plan.tumor.safety_margin
        ),
        cuts=[
            CutDocument(
                label=cut.label,
                normal=[float(v) for v in cut.plane.normal],
                offset=cut.plane.offset,
                mp=cut.planned_margin_mp,
            )
            for cut in plan.cuts
        ],
        pattern_pose=None if plan.pattern_pose is None else PoseDocument(**plan.pattern_pose.to_dict()),
    )


def plan_from_document(document: PlanDocument) -> ResectionPlan:
    tumor = TumorModel(Sphere(document.tumor.center, document.tumor.r), document.tumor.margin)
    cuts = tuple(
        PlannedCut(Plane(cut.normal, cut.offset, cut.label.value), cut.label, cut.mp) for cut in document.cuts
    )
    pose = None
    if document.pattern_pose is not None:
        pose = RigidTransform.from_quaternion(document.pattern_pose.quaternion_xyzw, document.pattern_pose.translation)
    return ResectionPlan(document.specimen_id, document.side, tumor, cuts, pose)


def plan_bytes(plan: ResectionPlan) -> bytes:
    return orjson.dumps(
        plan_to_document(plan).model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS
    )


def write_plan(plan: ResectionPlan, path: str | Path) -> None:
    Path(path).write_bytes(plan_bytes(plan))


def read_plan(path: str | Path) -> ResectionPlan:
    raw = Path(path).read_bytes()
    try:
        document = PlanDocument.model_validate(orjson.loads(raw))
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise SchemaError(f"invalid plan file {path}: {exc}") from exc
    try:
        return plan_from_document(document)
    except PlanError as exc:
        raise SchemaError(f"invalid plan file {path}: {exc}") from exc
