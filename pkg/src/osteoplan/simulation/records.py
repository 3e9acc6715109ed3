"""Trial results file: conversion between TrialResult and the JSON document."""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path

import orjson
from pydantic import ValidationError

from ..core import SchemaError
from ..geometry import PelvicFrame, Plane, RigidTransform, Sphere
from ..planning.model import PlannedCut, TumorModel
from .error_model import ErrorModel
from .execution import TrialResult
from .schema import CutRecord, MethodEnum, TrialRecord, TrialResultsDocument


def _floats(values: Iterable[float]) -> list[float]:
    return [float(v) for v in values]


def trial_to_record(trial: TrialResult) -> TrialRecord:
    plan = trial.plan
    return TrialRecord(
        specimen_id=plan.specimen_id,
        side=plan.side.value,
        method=trial.method,
        seed=trial.seed,
        complete=trial.complete,
        void_labels=list(trial.void_labels),
        tumor_center=_floats(plan.tumor.center),
        tumor_radius=plan.tumor.radius,
        safety_margin=plan.tumor.safety_margin,
        frame=trial.frame.transform.to_dict(),
        cuts=[
            CutRecord(
                label=cut.label,
                planned_normal=_floats(cut.planned.plane.normal),
                planned_offset=cut.planned.plane.offset,
                planned_mp=cut.planned.planned_margin_mp,
                achieved_normal=_floats(cut.achieved_plane.normal),
                achieved_offset=cut.achieved_plane.offset,
                dt_mm=cut.error.dt,
                droll_deg=cut.error.droll,
                dpitch_deg=cut.error.dpitch,
                kerf_mm=cut.kerf,
                cut_face_points=[_floats(point) for point in cut.cut_face_points],
            )
            for cut in trial.cuts
        ],
    )


def results_document(
    trials: Iterable[TrialResult], method: MethodEnum | str, kerf: float, model: ErrorModel
) -> TrialResultsDocument:
    records = sorted((trial_to_record(trial) for trial in trials), key=lambda r: (r.specimen_id, r.side))
    return TrialResultsDocument(method=MethodEnum(method), kerf_mm=kerf, error_model=model, trials=records)


def results_bytes(document: TrialResultsDocument) -> bytes:
    return orjson.dumps(document.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)


def read_results(path: str | Path) -> TrialResultsDocument:
    try:
        return TrialResultsDocument.model_validate(orjson.loads(Path(path).read_bytes()))
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise SchemaError(f"invalid trial results {path}: {exc}") from exc


def record_tumor(record: TrialRecord) -> TumorModel:
    return TumorModel(Sphere(record.tumor_center, record.tumor_radius), record.safety_margin)


def record_frame(record: TrialRecord) -> PelvicFrame:
    return PelvicFrame(RigidTransform.from_dict(record.frame))


def record_planned_cut(cut: CutRecord) -> PlannedCut:
    return PlannedCut(Plane(cut.planned_normal, cut.planned_offset, cut.label), cut.label, cut.planned_mp)
