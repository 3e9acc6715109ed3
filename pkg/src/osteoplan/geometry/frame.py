"""Pelvic anatomical frame built from the ASIS / PSIS landmarks.

Origin at the ASIS midpoint, Y along the ASIS-ASIS line, X ventral and
orthogonal to Y (PSIS midpoint -> ASIS midpoint, Gram-Schmidt against Y),
Z = X x Y.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..core import GeometryError
from .primitives import LandmarkSet, Plane
from .transform import RigidTransform, Vector3


class YAxisSign(str, enum.Enum):
    # right ASIS -> left ASIS; with X ventral this makes Z cranial
    RIGHT_TO_LEFT = "right_to_left"
    LEFT_TO_RIGHT = "left_to_right"


@dataclass(frozen=True, eq=False)
class PelvicFrame:
    """Wraps the world -> anatomical-frame transform."""

    transform: RigidTransform

    @property
    def origin(self) -> Vector3:
        """Frame origin in world coordinates."""
        return self.transform.inverse().translation

    @property
    def x_axis(self) -> Vector3:
        return self.transform.rotation[0]

    @property
    def y_axis(self) -> Vector3:
        return self.transform.rotation[1]

    @property
    def z_axis(self) -> Vector3:
        return self.transform.rotation[2]

    def to_frame(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return self.transform.apply(points)

    def to_world(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return self.transform.inverse().apply(points)

    def vector_to_frame(self, vectors: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return self.transform.apply_vector(vectors)

    def vector_to_world(self, vectors: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return self.transform.inverse().apply_vector(vectors)

    def plane_to_frame(self, plane: Plane) -> Plane:
        return plane.transformed(self.transform)

    def transformed(self, world_motion: RigidTransform) -> PelvicFrame:
        """Frame of the same pelvis after it moved by world_motion."""
        return PelvicFrame(self.transform.compose(world_motion.inverse()))


def build_pelvic_frame(
    landmarks: LandmarkSet,
    y_axis: YAxisSign | str = YAxisSign.RIGHT_TO_LEFT,
) -> PelvicFrame:
    sign = YAxisSign(y_axis)
    across = landmarks.asis_left - landmarks.asis_right
    length = float(np.linalg.norm(across))
    if length <= 1.0:
        raise GeometryError(f"ASIS-ASIS distance {length:.3f} mm is below 1 mm")
    y = across / length
    if sign is YAxisSign.LEFT_TO_RIGHT:
        y = -y

    ventral = landmarks.asis_midpoint - landmarks.psis_midpoint
    x = ventral - (ventral @ y) * y
    x_norm = float(np.linalg.norm(x))
    if x_norm <= 1e-6:
        raise GeometryError("PSIS midpoint lies on the ASIS line; X axis undefined")
    x = x / x_norm
    # drop the residual component left by floating point
    x = x - (x @ y) * y
    x = x / np.linalg.norm(x)
    z = np.cross(x, y)

    rotation = np.stack([x, y, z])
    origin = landmarks.asis_midpoint
    return PelvicFrame(RigidTransform(rotation, -rotation @ origin))
