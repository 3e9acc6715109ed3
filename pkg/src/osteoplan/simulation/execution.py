"""Simulated execution of planned cuts on the bone mesh.

An execution error (dt, droll, dpitch) is defined by what it does to the
measured plane. The achieved normal has the planned normal's projections
onto the pelvic YZ and XZ planes turned by exactly droll and dpitch. In a
trial the plane is then placed so that the tumor margin grows by dt; a
bare cut passes through the section centroid shifted dt along the planned
normal. The blade is centred on the achieved plane.

Cuts run in plan order on a shrinking mesh: every cut splits the current
tumor-side piece, the far piece becomes a host fragment and the near piece
is cut next. What is left after the last cut is the resected specimen.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from ..core import Finding, PlanError, VoidCutError
from ..geometry import (
    PelvicFrame,
    Plane,
    RigidTransform,
    TriangleMesh,
    cut_mesh_by_plane,
    plane_intersects,
    section_centroid,
)
from ..geometry.transform import Vector3
from ..planning.model import PlannedCut, ResectionPlan, Side, TumorModel
from .error_model import ErrorModel, ExecutionError, sample_execution_error, trial_rng
from .schema import MethodEnum

logger = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-12


@dataclass(frozen=True, eq=False)
class CutResult:
    planned: PlannedCut
    achieved_plane: Plane
    # vertices of the host-side cut face, kerf/2 beyond the achieved plane
    cut_face_points: npt.NDArray[np.float64]
    kerf: float
    error: ExecutionError
    host: TriangleMesh = field(default_factory=TriangleMesh.empty)
    remainder: TriangleMesh = field(default_factory=TriangleMesh.empty)

    @property
    def label(self) -> str:
        return self.planned.label.value


def tilted_normal(normal: npt.ArrayLike, droll: float, dpitch: float, frame: PelvicFrame) -> Vector3:
    """Unit normal with its YZ projection turned by droll about +X and its XZ projection by dpitch about +Y.

    Both turns are exact: measuring the result against ``normal`` gives back
    |droll| and |dpitch| folded into [0, 90].
    """
    n = np.asarray(normal, dtype=np.float64)
    nx, ny, nz = frame.vector_to_frame(n)
    roll = np.arctan2(ny, nz) - np.radians(droll)
    pitch = np.arctan2(nx, nz) + np.radians(dpitch)
    local = np.array([np.cos(roll) * np.sin(pitch), np.sin(roll) * np.cos(pitch), np.cos(roll) * np.cos(pitch)])
    length = float(np.linalg.norm(local))
    if length < DEGENERATE_NORM:
        # normal lies in the pelvic XY plane, neither projection has a direction
        return n
    tilted = np.asarray(frame.vector_to_world(local / length), dtype=np.float64)
    return tilted if float(tilted @ n) >= 0.0 else -tilted


def achieved_plane(
    cut: PlannedCut,
    error: ExecutionError,
    frame: PelvicFrame,
    bone: TriangleMesh,
    guide_error: RigidTransform | None = None,
    tumor: TumorModel | None = None,
) -> Plane:
    """Plane the saw actually follows; guide_error first moves the guided target."""
    target = cut.plane if guide_error is None else cut.plane.transformed(guide_error)
    pivot = section_centroid(bone, target)
    if pivot is None:
        raise VoidCutError(f"{cut.label.value}: planned plane does not intersect bone")
    normal = tilted_normal(target.normal, error.droll, error.dpitch, frame)
    if tumor is None:
        return Plane.from_point_normal(pivot + error.dt * target.normal, normal, cut.label.value)
    # distance of the tumor center behind the target plane
    clearance = target.offset - float(target.normal @ tumor.center)
    return Plane(normal, float(normal @ tumor.center) + clearance + error.dt, cut.label.value)


def execute_cut(
    cut: PlannedCut,
    error: ExecutionError,
    frame: PelvicFrame,
    bone: TriangleMesh,
    kerf: float,
    guide_error: RigidTransform | None = None,
    tumor: TumorModel | None = None,
) -> CutResult:
    plane = achieved_plane(cut, error, frame, bone, guide_error, tumor)
    if not plane_intersects(bone, plane):
        raise VoidCutError(f"{cut.label.value}: perturbed plane misses the bone")
    pieces = cut_mesh_by_plane(bone, plane, kerf)
    if len(pieces.cut_face_points) < 3 or pieces.removed.is_empty:
        raise VoidCutError(f"{cut.label.value}: kerf consumes the whole section")
    return CutResult(cut, plane, pieces.cut_face_points, float(kerf), error, pieces.kept, pieces.removed)


@dataclass(frozen=True, eq=False)
class TrialResult:
    plan: ResectionPlan
    frame: PelvicFrame
    method: MethodEnum
    seed: int
    cuts: tuple[CutResult, ...]
    void_labels: tuple[str, ...] = ()
    specimen: TriangleMesh = field(default_factory=TriangleMesh.empty)
    findings: tuple[Finding, ...] = ()

    @property
    def key(self) -> tuple[str, str]:
        return self.plan.key

    @property
    def complete(self) -> bool:
        return not self.void_labels

    @property
    def host_fragments(self) -> list[tuple[str, TriangleMesh]]:
        return [(cut.label, cut.host) for cut in self.cuts if not cut.host.is_empty]


def run_trial(
    plan: ResectionPlan,
    model: ErrorModel,
    bone: TriangleMesh,
    kerf: float,
    frame: PelvicFrame,
    rng: np.random.Generator,
    method: MethodEnum | str = MethodEnum.FREEHAND,
    seed: int = 0,
    guide_error: RigidTransform | None = None,
) -> TrialResult:
    """Execute every planned cut in order with an independent error draw per cut.

    Each cut's margin to the plan's tumor moves by exactly its dt. A void cut is
    skipped and recorded; the trial is then incomplete.
    """
    current = bone
    results: list[CutResult] = []
    void: list[str] = []
    findings: list[Finding] = []
    for cut in plan.cuts:
        error = sample_execution_error(model, rng)
        try:
            result = execute_cut(cut, error, frame, current, kerf, guide_error, plan.tumor)
        except VoidCutError as exc:
            void.append(cut.label.value)
            findings.append(Finding("void-cut", str(exc)))
            logger.warning("trial %s/%s: %s", plan.specimen_id, plan.side.value, exc)
            continue
        results.append(result)
        current = result.remainder
    return TrialResult(plan, frame, MethodEnum(method), seed, tuple(results), tuple(void), current, tuple(findings))


@dataclass(frozen=True, eq=False)
class TrialInput:
    plan: ResectionPlan
    bone: TriangleMesh
    frame: PelvicFrame
    method: MethodEnum = MethodEnum.FREEHAND
    guide_error: RigidTransform | None = None


def run_batch(
    inputs: Sequence[TrialInput],
    model: ErrorModel,
    seeds: Sequence[int],
    kerf: float,
) -> dict[tuple[str, str], TrialResult]:
    """Trials keyed by (specimen, side), sorted by key.

    Each trial draws from its own stream derived from its seed and key, so the
    result does not depend on the order of the inputs.
    """
    if len(seeds) != len(inputs):
        raise PlanError(f"{len(seeds)} seeds for {len(inputs)} trials")
    keys = [item.plan.key for item in inputs]
    duplicates = sorted({key for key in keys if keys.count(key) > 1})
    if duplicates:
        raise PlanError(f"duplicate trial keys: {duplicates}")

    results: dict[tuple[str, str], TrialResult] = {}
    for item, seed in sorted(zip(inputs, seeds), key=lambda pair: pair[0].plan.key):
        specimen_id, side = item.plan.key
        results[item.plan.key] = run_trial(
            item.plan,
            model,
            item.bone,
            kerf,
            item.frame,
            trial_rng(seed, specimen_id, side),
            item.method,
            seed,
            item.guide_error,
        )
    logger.info("batch: %d trials, %d cuts", len(results), sum(len(t.cuts) for t in results.values()))
    return results


def sample_face_points(
    cut_face_points: npt.ArrayLike, count: int, noise_sd: float, rng: np.random.Generator
) -> npt.NDArray[np.float64]:
    """Simulated surface scan of a cut face: points inside the face hull plus isotropic noise.

    count == 0 returns the face points untouched.
    """
    points = np.asarray(cut_face_points, dtype=np.float64).reshape(-1, 3)
    if count <= 0 or len(points) == 0:
        return points
    picks = rng.integers(0, len(points), size=(count, 3))
    weights = rng.dirichlet(np.ones(3), size=count)
    samples = np.einsum("sk,skd->sd", weights, points[picks])
    return samples + rng.normal(0.0, noise_sd, size=samples.shape)


def allocate_methods(specimen_ids: Iterable[str], seed: int) -> Mapping[tuple[str, str], MethodEnum]:
    """Paired randomisation: one hemipelvis per specimen goes freehand, the other guided."""
    rng = np.random.default_rng(seed)
    allocation: dict[tuple[str, str], MethodEnum] = {}
    for specimen_id in sorted(set(specimen_ids)):
        left_guided = bool(rng.integers(0, 2))
        allocation[(specimen_id, Side.LEFT.value)] = MethodEnum.GUIDED if left_guided else MethodEnum.FREEHAND
        allocation[(specimen_id, Side.RIGHT.value)] = MethodEnum.FREEHAND if left_guided else MethodEnum.GUIDED
    return allocation
