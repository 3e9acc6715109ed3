"""Fitting an assembled jig onto the bone against the planned planes.

Per slot the deviation is the distance from the slot center to its planned
plane (mm) and the angle between the two planes (deg). A slotted block slides
along its own normal within its travel, and only the distance left after the
slide counts; the pose minimizes
sum(d^2 + (w * theta)^2). The pose starts from a closed-form estimate
(weighted Wahba rotation on the slot normals, base resting on the bone point
nearest the tumor, minimum-norm translation onto the planes) and is refined
with scipy's trust-region least squares.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from ..core import InfeasibleJigError, JigError
from ..geometry import RigidTransform, TriangleMesh, cast_rays
from ..planning import PlannedCut, ResectionPlan
from .assembly import JigAssembly, KWireAxis, SlotPlane

logger = logging.getLogger(__name__)

APPROACH_WEIGHT = 1e-3
PARALLEL_TOL = 1e-12


@dataclass(frozen=True)
class SlotResidual:
    label: str
    distance_mm: float
    angle_deg: float
    # block displacement along the slot normal
    slide_mm: float = 0.0

    def magnitude(self, angle_weight: float = 1.0) -> float:
        return float(np.hypot(self.distance_mm, angle_weight * self.angle_deg))


@dataclass(frozen=True)
class PinSelection:
    hole_id: str
    length: float
    # None when the pin axis misses the bone
    gap_mm: float | None


@dataclass(frozen=True, eq=False)
class JigPlacement:
    pose: RigidTransform
    residuals: tuple[SlotResidual, ...]
    pins: tuple[PinSelection, ...]
    objective: float
    angle_weight: float = 1.0

    @property
    def max_residual(self) -> float:
        return max((r.magnitude(self.angle_weight) for r in self.residuals), default=0.0)

    def k_wire_axes(self, assembly: JigAssembly) -> tuple[KWireAxis, ...]:
        return tuple(axis.transformed(self.pose) for axis in assembly.k_wire_axes)


def correspondences(assembly: JigAssembly, plan: ResectionPlan) -> list[tuple[SlotPlane, PlannedCut]]:
    """Slots paired with the planned cut carrying the same label."""
    if len(assembly.slots) > len(plan.cuts):
        raise JigError(f"{len(assembly.slots)} slots but only {len(plan.cuts)} planned cuts")
    labels = set(plan.labels)
    pairs = [(slot, plan.cut(slot.label)) for slot in assembly.slots if slot.label in labels]
    if not pairs:
        raise JigError("no slot label matches a planned cut")
    return pairs


def _slot_terms(
    slot: SlotPlane, cut: PlannedCut, rotation: npt.NDArray[np.float64], translation: npt.NDArray[np.float64]
) -> tuple[float, float, npt.NDArray[np.float64], float]:
    """Signed distance after the slide, folded angle (deg), unit rotation axis and slide (mm) of one slot."""
    normal = cut.plane.normal
    slot_normal = rotation @ slot.normal
    distance = float(normal @ (rotation @ slot.center + translation) - cut.plane.offset)
    alignment = float(normal @ slot_normal)
    slide = 0.0
    if slot.travel > 0 and abs(alignment) > PARALLEL_TOL:
        slide = float(np.clip(-distance / alignment, -slot.travel, slot.travel))
        distance += slide * alignment
    # planes are unoriented: compare against whichever planned normal is closer
    target = normal if slot_normal @ normal >= 0 else -normal
    cross = np.cross(slot_normal, target)
    sin_angle = float(np.linalg.norm(cross))
    angle = float(np.degrees(np.arctan2(sin_angle, float(slot_normal @ target))))
    axis = cross / sin_angle if sin_angle > 1e-15 else np.zeros(3)
    return distance, angle, axis, slide


def slot_residuals(assembly: JigAssembly, plan: ResectionPlan, pose: RigidTransform) -> tuple[SlotResidual, ...]:
    residuals = []
    for slot, cut in correspondences(assembly, plan):
        distance, angle, _, slide = _slot_terms(slot, cut, pose.rotation, pose.translation)
        residuals.append(SlotResidual(slot.label, distance, angle, slide))
    return tuple(residuals)


def pose_objective(
    assembly: JigAssembly, plan: ResectionPlan, pose: RigidTransform, angle_weight: float = 1.0
) -> float:
    residuals = slot_residuals(assembly, plan, pose)
    return float(sum(r.distance_mm**2 + (angle_weight * r.angle_deg) ** 2 for r in residuals))


def _wahba(
    local: npt.NDArray[np.float64], world: npt.NDArray[np.float64], weights: npt.NDArray[np.float64]
) -> tuple[npt.NDArray[np.float64], float]:
    """Proper rotation minimizing sum w |R a - b|^2 and its cost."""
    covariance = (weights[:, None] * local).T @ world
    u, _, vt = np.linalg.svd(covariance)
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    rotation = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    cost = float(np.sum(weights * np.sum((local @ rotation.T - world) ** 2, axis=1)))
    return rotation, cost


def _anchor(
    plan: ResectionPlan, bone: TriangleMesh | None
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64] | None]:
    """Bone vertex nearest the tumor center and the outward direction toward it."""
    center = plan.tumor.center
    if bone is None or bone.is_empty:
        return center, None
    distances = np.linalg.norm(bone.vertices - center, axis=1)
    nearest = bone.vertices[int(np.argmin(distances))]
    offset = nearest - center
    norm = float(np.linalg.norm(offset))
    return nearest, (offset / norm if norm > 1e-9 else None)


def initial_pose(
    assembly: JigAssembly, plan: ResectionPlan, bone: TriangleMesh | None
) -> tuple[RigidTransform, float]:
    """Closed-form starting pose and the norm of its translation correction."""
    pairs = correspondences(assembly, plan)
    anchor, approach = _anchor(plan, bone)
    slot_normals = np.array([slot.normal for slot, _ in pairs])
    # two independent slot normals fix the rotation; the approach vector then only picks the sign pattern
    determined = len(pairs) >= 2 and np.linalg.svd(slot_normals, compute_uv=False)[1] > 1e-6
    up = np.array([0.0, 0.0, 1.0])

    best: tuple[float, npt.NDArray[np.float64]] | None = None
    for signs in itertools.product((1.0, -1.0), repeat=len(pairs)):
        world = np.array([sign * cut.plane.normal for sign, (_, cut) in zip(signs, pairs)])
        if determined or approach is None:
            rotation, cost = _wahba(slot_normals, world, np.ones(len(pairs)))
        else:
            rotation, cost = _wahba(
                np.vstack([slot_normals, up]),
                np.vstack([world, approach]),
                np.append(np.ones(len(pairs)), APPROACH_WEIGHT),
            )
        if determined and approach is not None:
            cost += APPROACH_WEIGHT * float(np.sum((rotation @ up - approach) ** 2))
        if best is None or cost < best[0] - 1e-12:
            best = (cost, rotation)
    assert best is not None
    rotation = best[1]

    translation = anchor - rotation @ assembly.bottom_center
    normals = np.array([cut.plane.normal for _, cut in pairs])
    gaps = np.array(
        [cut.plane.offset - cut.plane.normal @ (rotation @ slot.center + translation) for slot, cut in pairs]
    )
    correction, *_ = np.linalg.lstsq(normals, gaps, rcond=None)
    return RigidTransform(rotation, translation + correction), float(np.linalg.norm(correction))


def refine_pose(
    assembly: JigAssembly, plan: ResectionPlan, start: RigidTransform, angle_weight: float = 1.0
) -> RigidTransform:
    pairs = correspondences(assembly, plan)
    base_rotation = start.rotation
    base_translation = start.translation

    def residuals(params: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        rotation = Rotation.from_rotvec(params[:3]).as_matrix() @ base_rotation
        translation = base_translation + params[3:]
        out = []
        for slot, cut in pairs:
            distance, angle, axis, _ = _slot_terms(slot, cut, rotation, translation)
            out.append(distance)
            out.extend(angle_weight * angle * axis)
        return np.asarray(out)

    result = least_squares(residuals, np.zeros(6), method="trf", xtol=1e-12, ftol=1e-12, gtol=1e-12)
    refined = RigidTransform(
        Rotation.from_rotvec(result.x[:3]).as_matrix() @ base_rotation, base_translation + result.x[3:]
    )
    if pose_objective(assembly, plan, refined, angle_weight) > pose_objective(assembly, plan, start, angle_weight):
        return start
    return refined


def select_pins(assembly: JigAssembly, pose: RigidTransform, bone: TriangleMesh) -> tuple[PinSelection, ...]:
    """Per pin hole, the stock length whose tip lands closest to the bone surface."""
    if not assembly.pin_holes:
        return ()
    origins = pose.apply(np.array([hole.position for hole in assembly.pin_holes]))
    directions = pose.apply_vector(np.array([hole.axis for hole in assembly.pin_holes]))
    hits = cast_rays(origins, directions, bone)
    stock = sorted(assembly.pin_stock)
    selections = []
    for index, hole in enumerate(assembly.pin_holes):
        if not hits.hit[index]:
            selections.append(PinSelection(hole.id, stock[0], None))
            continue
        reach = float(hits.distance[index])
        length = min(stock, key=lambda value: (abs(reach - value), value))
        selections.append(PinSelection(hole.id, length, reach - length))
    return tuple(selections)


def evaluate_placement(
    assembly: JigAssembly,
    plan: ResectionPlan,
    pose: RigidTransform,
    bone: TriangleMesh | None,
    angle_weight: float = 1.0,
) -> JigPlacement:
    """Residuals and pins of an assembly held at a fixed pose."""
    residuals = slot_residuals(assembly, plan, pose)
    pins = select_pins(assembly, pose, bone) if bone is not None else ()
    objective = float(sum(r.distance_mm**2 + (angle_weight * r.angle_deg) ** 2 for r in residuals))
    return JigPlacement(pose, residuals, pins, objective, angle_weight)


def fit_jig_pose(
    assembly: JigAssembly,
    plan: ResectionPlan,
    bone: TriangleMesh | None,
    angle_weight: float = 1.0,
    feasibility_limit: float = 10.0,
) -> JigPlacement:
    """Least-squares jig pose; bone=None skips the surface anchor and the pin selection."""
    start, _ = initial_pose(assembly, plan, bone)
    pose = refine_pose(assembly, plan, start, angle_weight)
    placement = evaluate_placement(assembly, plan, pose, bone, angle_weight)
    worst = max(placement.residuals, key=lambda r: r.magnitude(angle_weight))
    if worst.magnitude(angle_weight) >= feasibility_limit:
        raise InfeasibleJigError(
            f"infeasible configuration: slot {worst.label} off by {worst.distance_mm:.2f} mm / "
            f"{worst.angle_deg:.2f} deg (limit {feasibility_limit:g} mm)"
        )
    logger.debug("jig step %d fitted, objective %.3g", assembly.step, placement.objective)
    return placement


def pattern_pose(placement: JigPlacement, assembly: JigAssembly) -> RigidTransform:
    """World pose of the engraved rectangle at the fitted placement."""
    if assembly.pattern_pose is None:
        raise JigError("assembly carries no engraved pattern")
    return placement.pose.compose(assembly.pattern_pose)


def placement_report(placement: JigPlacement, assembly: JigAssembly | None = None) -> dict[str, Any]:
    report: dict[str, Any] = {
        "pose": placement.pose.to_dict(),
        "objective": placement.objective,
        "angle_weight_mm_per_deg": placement.angle_weight,
        "residuals": [
            {"label": r.label, "distance_mm": r.distance_mm, "angle_deg": r.angle_deg, "slide_mm": r.slide_mm}
            for r in placement.residuals
        ],
        "pins": [{"hole": p.hole_id, "length_mm": p.length, "gap_mm": p.gap_mm} for p in placement.pins],
    }
    if assembly is not None:
        report["components"] = list(assembly.components)
        report["k_wire_axes"] = [
            {"id": axis.id, "point": [float(v) for v in axis.point], "direction": [float(v) for v in axis.direction]}
            for axis in placement.k_wire_axes(assembly)
        ]
    return report
