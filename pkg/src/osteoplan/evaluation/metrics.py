"""Post-operative accuracy measures of the resected planes.

Per plane: the realised margin Mr against the planned Mp, the distance
deviation |Mp - Mr| with its sign (negative toward the tumor), and the roll
and pitch deviations. Roll is the angle between the two normals projected
onto the pelvic YZ plane, pitch the angle between their XZ projections;
planes are unoriented, so both fold into [0, 90] degrees.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from ..core import Finding
from ..geometry import PelvicFrame, Plane, fit_plane
from ..planning.model import PlannedCut, TumorModel, planned_margin
from ..simulation import (
    MethodEnum,
    TrialRecord,
    TrialResultsDocument,
    record_frame,
    record_planned_cut,
    record_tumor,
    sample_face_points,
    trial_rng,
)

logger = logging.getLogger(__name__)

PROJECTION_TOL = 1e-9
# stream index of the simulated post-op scan, next to the cut (0) and registration (1) streams
SCAN_STREAM = 2


@dataclass(frozen=True)
class PlaneDeviation:
    label: str
    distance_deviation: float
    signed_deviation: float
    # None when the normal is parallel to the projection axis
    roll_deviation: float | None
    pitch_deviation: float | None
    mr: float
    mp: float
    findings: tuple[Finding, ...] = ()


@dataclass(frozen=True)
class SpecimenReport:
    specimen_id: str
    side: str
    method: MethodEnum
    deviations: tuple[PlaneDeviation, ...]
    complete: bool = True
    findings: tuple[Finding, ...] = field(default=())

    @property
    def max_deviation(self) -> float:
        return max((d.distance_deviation for d in self.deviations), default=0.0)


def extract_resected_plane(
    cut_face_points: npt.ArrayLike, planned: Plane | None = None, kerf: float = 0.0, label: str = ""
) -> Plane:
    """Fit the resected plane to cut-face samples.

    The normal follows the planned one (away from the tumor). Samples taken on
    the host face sit kerf/2 beyond the blade center; the fit is moved back by
    that amount.
    """
    direction = (0.0, 0.0, 1.0) if planned is None else planned.normal
    if not label and planned is not None:
        label = planned.label
    fitted = fit_plane(cut_face_points, reference_direction=direction, label=label)
    return fitted.plane.translated(-kerf / 2.0)


def _projected_angle(a: npt.NDArray[np.float64], b: npt.NDArray[np.float64]) -> float | None:
    if np.linalg.norm(a) < PROJECTION_TOL or np.linalg.norm(b) < PROJECTION_TOL:
        return None
    cross = abs(float(a[0] * b[1] - a[1] * b[0]))
    dot = abs(float(a @ b))
    return float(np.degrees(np.arctan2(cross, dot)))


def deviations(planned: PlannedCut, resected: Plane, tumor: TumorModel, frame: PelvicFrame) -> PlaneDeviation:
    label = planned.label.value
    mp = planned.planned_margin_mp
    mr = planned_margin(resected, tumor)
    planned_local = frame.vector_to_frame(planned.plane.normal)
    resected_local = frame.vector_to_frame(resected.normal)
    roll = _projected_angle(planned_local[[1, 2]], resected_local[[1, 2]])
    pitch = _projected_angle(planned_local[[0, 2]], resected_local[[0, 2]])
    findings = []
    if roll is None:
        findings.append(Finding("undefined-roll", f"{label}: normal parallel to the pelvic X axis"))
    if pitch is None:
        findings.append(Finding("undefined-pitch", f"{label}: normal parallel to the pelvic Y axis"))
    return PlaneDeviation(label, abs(mp - mr), mr - mp, roll, pitch, mr, mp, tuple(findings))


def evaluate_trial(record: TrialRecord, face_samples: int = 0, face_noise: float = 0.0) -> SpecimenReport:
    """Deviations of every executed cut of one trial.

    face_samples > 0 replaces the raw cut-face vertices with a simulated
    surface scan drawn from the trial's own stream.
    """
    tumor = record_tumor(record)
    frame = record_frame(record)
    rng = trial_rng(record.seed, record.specimen_id, record.side, SCAN_STREAM)
    rows = []
    findings: list[Finding] = []
    for cut in record.cuts:
        planned = record_planned_cut(cut)
        points = sample_face_points(cut.cut_face_points, face_samples, face_noise, rng)
        resected = extract_resected_plane(points, planned.plane, cut.kerf_mm)
        deviation = deviations(planned, resected, tumor, frame)
        rows.append(deviation)
        findings.extend(deviation.findings)
    if not record.complete:
        findings.append(Finding("incomplete", f"void cuts: {', '.join(record.void_labels)}"))
    for finding in findings:
        logger.info("%s/%s: %s", record.specimen_id, record.side, finding)
    return SpecimenReport(record.specimen_id, record.side, record.method, tuple(rows), record.complete, tuple(findings))


def evaluate_results(
    document: TrialResultsDocument, face_samples: int = 0, face_noise: float = 0.0
) -> list[SpecimenReport]:
    return [evaluate_trial(record, face_samples, face_noise) for record in document.trials]


def all_deviations(reports: Sequence[SpecimenReport]) -> list[PlaneDeviation]:
    return [deviation for report in reports for deviation in report.deviations]
