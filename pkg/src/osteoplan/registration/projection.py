"""Projecting the jig's engraved rectangle onto the bone surface.

The projector is a pinhole looking along its local +z axis. Image
coordinates are expressed in mm at unit depth: u = fx * x / z, v = fy * y / z.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..core import RegistrationError
from ..geometry import RigidTransform, TriangleMesh, cast_rays

logger = logging.getLogger(__name__)

SAMPLES_PER_EDGE = 16


@dataclass(frozen=True, eq=False)
class ProjectorModel:
    """Projector pose (local -> world), focal parameters and image half-extent at unit depth."""

    pose: RigidTransform
    focal: tuple[float, float] = (1.0, 1.0)
    image_size: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        if min(self.focal) <= 0:
            raise RegistrationError(f"focal parameters must be positive, got {self.focal}")
        if min(self.image_size) <= 0:
            raise RegistrationError(f"image rectangle must be positive, got {self.image_size}")

    @classmethod
    def looking_at(
        cls,
        center: npt.ArrayLike,
        target: npt.ArrayLike,
        up: npt.ArrayLike = (0.0, 0.0, 1.0),
        focal: tuple[float, float] = (1.0, 1.0),
        image_size: tuple[float, float] = (1.0, 1.0),
    ) -> ProjectorModel:
        origin = np.asarray(center, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - origin
        forward /= np.linalg.norm(forward)
        side = np.cross(np.asarray(up, dtype=np.float64), forward)
        if np.linalg.norm(side) < 1e-9:
            side = np.cross(np.array([1.0, 0.0, 0.0]), forward)
        side /= np.linalg.norm(side)
        rotation = np.column_stack([side, np.cross(forward, side), forward])
        return cls(RigidTransform(rotation, origin), focal, image_size)

    @property
    def center(self) -> npt.NDArray[np.float64]:
        return self.pose.translation

    def image_coordinates(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """(u, v, depth) per world point."""
        local = self.pose.inverse().apply(np.atleast_2d(np.asarray(points, dtype=np.float64)))
        depth = local[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.focal[0] * local[:, 0] / depth
            v = self.focal[1] * local[:, 1] / depth
        return np.column_stack([u, v, depth])

    def in_frustum(self, points: npt.ArrayLike) -> npt.NDArray[np.bool_]:
        image = self.image_coordinates(points)
        return (
            (image[:, 2] > 0)
            & (np.abs(image[:, 0]) <= self.image_size[0] / 2.0)
            & (np.abs(image[:, 1]) <= self.image_size[1] / 2.0)
        )


def rectangle_outline(width: float, height: float, samples_per_edge: int = SAMPLES_PER_EDGE) -> npt.NDArray[np.float64]:
    """Closed outline of a width x height rectangle in its local xy plane, counter-clockwise."""
    if width <= 0 or height <= 0:
        raise RegistrationError(f"pattern rectangle must be positive, got {width} x {height}")
    corners = np.array(
        [[-width, -height], [width, -height], [width, height], [-width, height], [-width, -height]]
    ) / 2.0
    steps = np.linspace(0.0, 1.0, samples_per_edge, endpoint=False)
    edges = [start + steps[:, None] * (stop - start) for start, stop in zip(corners[:-1], corners[1:])]
    outline = np.vstack(edges)
    return np.column_stack([outline, np.zeros(len(outline))])


@dataclass(frozen=True, eq=False)
class ProjectedPattern:
    outline: npt.NDArray[np.float64]
    surface: npt.NDArray[np.float64]  # NaN rows where the ray missed
    hit: npt.NDArray[np.bool_]

    @property
    def polyline(self) -> npt.NDArray[np.float64]:
        return self.surface[self.hit]

    @property
    def coverage(self) -> float:
        return float(np.mean(self.hit))


def project_pattern(
    rectangle: tuple[float, float],
    target_pose: RigidTransform,
    projector: ProjectorModel,
    bone: TriangleMesh | None,
    samples_per_edge: int = SAMPLES_PER_EDGE,
) -> ProjectedPattern:
    """Cast the rectangle outline from the projector center onto the bone."""
    if bone is None or bone.is_empty:
        raise RegistrationError("no bone surface to project onto")
    outline = target_pose.apply(rectangle_outline(rectangle[0], rectangle[1], samples_per_edge))
    inside = projector.in_frustum(outline)
    if not inside.all():
        raise RegistrationError(f"{int((~inside).sum())} pattern points fall outside the projector frustum")
    directions = outline - projector.center
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    hits = cast_rays(projector.center, directions, bone)
    if not hits.hit.any():
        raise RegistrationError("projected pattern misses the bone entirely")
    if not hits.hit.all():
        logger.info("projected pattern: %d of %d points miss the bone", int((~hits.hit).sum()), len(outline))
    return ProjectedPattern(outline, hits.points, hits.hit)
