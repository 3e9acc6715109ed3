"""Tumor model, planned cuts and the resection plan."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import numpy.typing as npt

from ..core import PlanError
from ..geometry import Plane, RigidTransform, Sphere, fit_sphere, signed_point_plane_distance, unit

MARGIN_TOL = 1e-9


class CutLabel(str, enum.Enum):
    SUPRA_ACETABULAR = "supra-acetabular"
    INFRA_ACETABULAR = "infra-acetabular"
    SUPERIOR_PUBIC_RAMUS = "superior-pubic-ramus"
    AUXILIARY = "auxiliary"


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True, eq=False)
class TumorModel:
    sphere: Sphere
    safety_margin: float

    def __post_init__(self) -> None:
        if self.safety_margin < 0:
            raise PlanError(f"safety margin must be >= 0, got {self.safety_margin}")
        object.__setattr__(self, "safety_margin", float(self.safety_margin))

    @property
    def center(self) -> npt.NDArray[np.float64]:
        return self.sphere.center

    @property
    def radius(self) -> float:
        return self.sphere.radius

    def transformed(self, transform: RigidTransform) -> TumorModel:
        return TumorModel(self.sphere.transformed(transform), self.safety_margin)


def make_tumor(
    radius: float,
    margin: float,
    hip_center: npt.ArrayLike | None = None,
    acetabular_points: npt.ArrayLike | None = None,
) -> TumorModel:
    """Sphere at the hip rotation center, given directly or fitted to acetabular points.

    A fitted sphere contributes only its center; the radius is always the argument.
    """
    if not radius > 0:
        raise PlanError(f"tumor radius must be positive, got {radius}")
    if margin < 0:
        raise PlanError(f"safety margin must be >= 0, got {margin}")
    if acetabular_points is not None:
        center = fit_sphere(acetabular_points).sphere.center
    elif hip_center is not None:
        center = np.asarray(hip_center, dtype=np.float64)
    else:
        raise PlanError("make_tumor needs a hip center or acetabular points")
    return TumorModel(Sphere(center, radius), margin)


def planned_margin(plane: Plane, tumor: TumorModel) -> float:
    """|n.c - d| - r; negative when the plane enters the tumor."""
    return abs(signed_point_plane_distance(tumor.center, plane)) - tumor.radius


@dataclass(frozen=True, eq=False)
class PlannedCut:
    plane: Plane
    label: CutLabel
    planned_margin_mp: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", CutLabel(self.label))
        if self.plane.label != self.label.value:
            object.__setattr__(self, "plane", self.plane.with_label(self.label.value))
        object.__setattr__(self, "planned_margin_mp", float(self.planned_margin_mp))

    @classmethod
    def from_plane(cls, plane: Plane, label: CutLabel | str, tumor: TumorModel) -> PlannedCut:
        """Orient the plane away from the tumor center and measure its margin."""
        if signed_point_plane_distance(tumor.center, plane) > 0:
            plane = plane.flipped()
        return cls(plane, CutLabel(label), planned_margin(plane, tumor))

    def transformed(self, transform: RigidTransform) -> PlannedCut:
        return replace(self, plane=self.plane.transformed(transform))


@dataclass(frozen=True, eq=False)
class ResectionPlan:
    specimen_id: str
    side: Side
    tumor: TumorModel
    cuts: tuple[PlannedCut, ...]
    pattern_pose: RigidTransform | None = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "cuts", tuple(self.cuts))
        labels = [cut.label for cut in self.cuts]
        if len(set(labels)) != len(labels):
            raise PlanError(f"duplicate cut labels in plan {self.specimen_id}/{self.side.value}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.specimen_id, self.side.value)

    @property
    def labels(self) -> list[str]:
        return [cut.label.value for cut in self.cuts]

    def cut(self, label: CutLabel | str) -> PlannedCut:
        label = CutLabel(label)
        for cut in self.cuts:
            if cut.label is label:
                return cut
        raise PlanError(f"plan has no cut labelled {label.value}")

    def with_pattern_pose(self, pose: RigidTransform) -> ResectionPlan:
        return replace(self, pattern_pose=pose)

    def transformed(self, transform: RigidTransform) -> ResectionPlan:
        return replace(
            self,
            tumor=self.tumor.transformed(transform),
            cuts=tuple(cut.transformed(transform) for cut in self.cuts),
            pattern_pose=None if self.pattern_pose is None else transform.compose(self.pattern_pose),
        )


def generate_margin_planes(
    tumor: TumorModel, normals: npt.ArrayLike, labels: list[CutLabel] | list[str]
) -> list[PlannedCut]:
    """Planes tangent to the sphere of radius r + margin, normals away from the center."""
    normal_rows = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    if len(normal_rows) != len(labels):
        raise PlanError(f"{len(normal_rows)} normals for {len(labels)} labels")
    resolved = [CutLabel(label) for label in labels]
    if len(set(resolved)) != len(resolved):
        raise PlanError("duplicate cut labels")

    distance = tumor.radius + tumor.safety_margin
    cuts = []
    for normal, label in zip(normal_rows, resolved):
        n = unit(normal)
        plane = Plane(n, float(n @ tumor.center) + distance, label.value)
        cuts.append(PlannedCut(plane, label, planned_margin(plane, tumor)))
    return cuts
