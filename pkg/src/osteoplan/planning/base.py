from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping

import numpy as np
import numpy.typing as npt

from ..core import Finding
from ..geometry import PelvicFrame, TriangleMesh, plane_intersects, signed_point_plane_distance
from .model import MARGIN_TOL, CutLabel, ResectionPlan, Side, planned_margin

logger = logging.getLogger(__name__)


def validate_plan(plan: ResectionPlan, bone: TriangleMesh) -> list[Finding]:
    """Safety-margin and feasibility checks; problems come back as findings."""
    findings: list[Finding] = []
    tumor = plan.tumor
    for cut in plan.cuts:
        label = cut.label.value
        measured = planned_margin(cut.plane, tumor)
        # one margin finding per cut, the most severe problem names it
        problems: list[tuple[str, str]] = []
        if measured < 0:
            problems.append(("intralesional", f"plane enters the tumor (Mp {measured:.1f})"))
        elif measured < tumor.safety_margin - MARGIN_TOL:
            problems.append(("margin", f"Mp {measured:.1f} < margin {tumor.safety_margin:.1f}"))
        if abs(measured - cut.planned_margin_mp) > 1e-6:
            problems.append(
                ("mp-mismatch", f"stored Mp {cut.planned_margin_mp:.3f} but plane gives {measured:.3f}")
            )
        if problems:
            findings.append(Finding(problems[0][0], f"{label}: " + "; ".join(text for _, text in problems)))
        if signed_point_plane_distance(tumor.center, cut.plane) > 0:
            findings.append(Finding("orientation", f"{label}: tumor center is not on the resected side"))
        if not plane_intersects(bone, cut.plane):
            findings.append(Finding("void-plane", f"{label}: plane does not intersect bone"))
    for finding in findings:
        logger.info("plan %s/%s: %s", plan.specimen_id, plan.side.value, finding)
    return findings


def default_cut_normals(
    frame: PelvicFrame,
    directions: Mapping[str, Iterable[float]],
    side: Side | str = Side.LEFT,
) -> tuple[npt.NDArray[np.float64], list[CutLabel]]:
    """World-space cut normals from pelvic-frame directions.

    Directions are given for a left hemipelvis; a right one mirrors the Y
    component.
    """
    mirror = np.array([1.0, -1.0 if Side(side) is Side.RIGHT else 1.0, 1.0])
    labels = [CutLabel(label) for label in directions]
    local = np.array([np.asarray(list(directions[label.value]), dtype=np.float64) * mirror for label in labels])
    local /= np.linalg.norm(local, axis=1, keepdims=True)
    return frame.vector_to_world(local), labels
