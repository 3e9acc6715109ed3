"""Analytic primitives: planes, spheres and pelvic landmarks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import numpy.typing as npt

from ..core import GeometryError
from .transform import RigidTransform, Vector3, as_points, as_vector, unit

UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Plane:
    """Locus n . x = offset, with n a unit normal."""

    normal: Vector3
    offset: float
    label: str = ""

    def __post_init__(self) -> None:
        normal = as_vector(self.normal).copy()
        norm = float(np.linalg.norm(normal))
        if abs(norm - 1.0) > UNIT_TOL:
            if norm <= 1e-12:
                raise GeometryError("plane normal has zero length")
            normal = normal / norm
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_point_normal(cls, point: npt.ArrayLike, normal: npt.ArrayLike, label: str = "") -> Plane:
        n = unit(normal)
        return cls(n, float(n @ as_vector(point)), label)

    @property
    def point(self) -> Vector3:
        """Foot of the perpendicular from the origin."""
        return self.normal * self.offset

    def signed_distance(self, points: npt.ArrayLike) -> npt.NDArray[np.float64] | float:
        arr = np.asarray(points, dtype=np.float64)
        dist = arr @ self.normal - self.offset
        if arr.ndim == 1:
            return float(dist)
        return dist

    def project(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        arr = as_points(points)
        return arr - np.outer(arr @ self.normal - self.offset, self.normal)

    def flipped(self) -> Plane:
        return Plane(-self.normal, -self.offset, self.label)

    def translated(self, distance: float) -> Plane:
        """Move the plane by distance along its own normal."""
        return Plane(self.normal, self.offset + distance, self.label)

    def transformed(self, transform: RigidTransform) -> Plane:
        normal = transform.apply_vector(self.normal)
        return Plane(normal, float(normal @ transform.apply(self.point)), self.label)

    def with_label(self, label: str) -> Plane:
        return replace(self, label=label)

    def angle_to_deg(self, other: Plane) -> float:
        cos_angle = float(np.clip(self.normal @ other.normal, -1.0, 1.0))
        return float(np.degrees(np.arccos(cos_angle)))

    def to_dict(self) -> dict[str, object]:
        return {"label": self.label, "normal": [float(v) for v in self.normal], "offset": self.offset}


def signed_point_plane_distance(point: npt.ArrayLike, plane: Plane) -> float:
    """n . p - offset; positive on the normal side."""
    return float(plane.normal @ as_vector(point) - plane.offset)


@dataclass(frozen=True, eq=False)
class Sphere:
    center: Vector3
    radius: float

    def __post_init__(self) -> None:
        center = as_vector(self.center).copy()
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not self.radius > 0:
            raise GeometryError(f"sphere radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    def transformed(self, transform: RigidTransform) -> Sphere:
        return Sphere(transform.apply(self.center), self.radius)

    def sample_surface(self, count: int, rng: np.random.Generator) -> npt.NDArray[np.float64]:
        directions = rng.normal(size=(count, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        return self.center + self.radius * directions


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """ASIS / PSIS landmarks in CT (world) coordinates."""

    asis_left: Vector3
    asis_right: Vector3
    psis_left: Vector3
    psis_right: Vector3
    hip_center: Vector3 | None = field(default=None)

    def __post_init__(self) -> None:
        for name in ("asis_left", "asis_right", "psis_left", "psis_right"):
            value = as_vector(getattr(self, name)).copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if self.hip_center is not None:
            hip = as_vector(self.hip_center).copy()
            hip.setflags(write=False)
            object.__setattr__(self, "hip_center", hip)

        if np.linalg.norm(self.asis_left - self.asis_right) <= 1.0:
            raise GeometryError("ASIS landmarks closer than 1 mm")
        points = np.stack([self.asis_left, self.asis_right, self.psis_left, self.psis_right])
        singular = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
        if singular[1] <= 1e-9 * max(singular[0], 1.0):
            raise GeometryError("pelvic landmarks are collinear")

    @property
    def asis_midpoint(self) -> Vector3:
        return (self.asis_left + self.asis_right) / 2.0

    @property
    def psis_midpoint(self) -> Vector3:
        return (self.psis_left + self.psis_right) / 2.0

    def transformed(self, transform: RigidTransform) -> LandmarkSet:
        return LandmarkSet(
            asis_left=transform.apply(self.asis_left),
            asis_right=transform.apply(self.asis_right),
            psis_left=transform.apply(self.psis_left),
            psis_right=transform.apply(self.psis_right),
            hip_center=None if self.hip_center is None else transform.apply(self.hip_center),
        )

    def to_dict(self) -> dict[str, list[float] | None]:
        return {
            "asis_left": [float(v) for v in self.asis_left],
            "asis_right": [float(v) for v in self.asis_right],
            "psis_left": [float(v) for v in self.psis_left],
            "psis_right": [float(v) for v in self.psis_right],
            "hip_center": None if self.hip_center is None else [float(v) for v in self.hip_center],
        }
