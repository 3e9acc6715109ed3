"""Rigid transforms in millimeters.

Every frame change in the package (CT to pelvic frame, jig-local to bone,
registration estimates, tracked bone poses) goes through RigidTransform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.spatial.transform import Rotation

from ..core import GeometryError

Vector3 = npt.NDArray[np.float64]
Points = npt.NDArray[np.float64]

PROPER_TOL = 1e-9


def as_vector(value: npt.ArrayLike) -> Vector3:
    vec = np.asarray(value, dtype=np.float64).reshape(3)
    return vec


def as_points(value: npt.ArrayLike) -> Points:
    pts = np.asarray(value, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise GeometryError(f"expected an (n, 3) point array, got shape {pts.shape}")
    return pts


def unit(value: npt.ArrayLike, tol: float = 1e-12) -> Vector3:
    """Normalize a vector, raising on zero length."""
    vec = as_vector(value)
    norm = float(np.linalg.norm(vec))
    if norm <= tol:
        raise GeometryError("cannot normalize a zero-length vector")
    return vec / norm


def _frozen(array: npt.ArrayLike, shape: tuple[int, ...]) -> npt.NDArray[np.float64]:
    out = np.array(array, dtype=np.float64).reshape(shape)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """x -> rotation @ x + translation."""

    rotation: npt.NDArray[np.float64]
    translation: Vector3

    def __post_init__(self) -> None:
        rotation = _frozen(self.rotation, (3, 3))
        translation = _frozen(self.translation, (3,))
        if not np.allclose(rotation @ rotation.T, np.eye(3), atol=PROPER_TOL):
            raise GeometryError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > PROPER_TOL:
            raise GeometryError("rotation is not proper (det != +1)")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_rotation(cls, rotation: Rotation, translation: npt.ArrayLike = (0.0, 0.0, 0.0)) -> RigidTransform:
        return cls(rotation.as_matrix(), as_vector(translation))

    @classmethod
    def from_rotvec(cls, rotvec: npt.ArrayLike, translation: npt.ArrayLike = (0.0, 0.0, 0.0)) -> RigidTransform:
        return cls.from_rotation(Rotation.from_rotvec(as_vector(rotvec)), translation)

    @classmethod
    def from_quaternion(cls, quat_xyzw: npt.ArrayLike, translation: npt.ArrayLike) -> RigidTransform:
        return cls.from_rotation(Rotation.from_quat(np.asarray(quat_xyzw, dtype=np.float64)), translation)

    @classmethod
    def from_euler_deg(
        cls, angles: npt.ArrayLike, translation: npt.ArrayLike = (0.0, 0.0, 0.0), seq: str = "xyz"
    ) -> RigidTransform:
        rotation = Rotation.from_euler(seq, np.asarray(angles, dtype=np.float64), degrees=True)
        return cls.from_rotation(rotation, translation)

    @classmethod
    def from_matrix(cls, matrix: npt.ArrayLike) -> RigidTransform:
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.shape != (4, 4):
            raise GeometryError(f"expected a 4x4 homogeneous matrix, got {mat.shape}")
        return cls(mat[:3, :3], mat[:3, 3])

    @classmethod
    def about_axis(cls, axis: npt.ArrayLike, angle_deg: float, pivot: npt.ArrayLike) -> RigidTransform:
        """Rotation by angle_deg about the line through pivot along axis."""
        rot = Rotation.from_rotvec(unit(axis) * np.deg2rad(angle_deg)).as_matrix()
        p = as_vector(pivot)
        return cls(rot, p - rot @ p)

    @classmethod
    def random(cls, rng: np.random.Generator, translation_scale: float = 100.0) -> RigidTransform:
        # normalised gaussian quaternions are uniform on SO(3)
        rot = Rotation.from_quat(rng.normal(size=4))
        return cls.from_rotation(rot, rng.uniform(-translation_scale, translation_scale, size=3))

    def as_matrix(self) -> npt.NDArray[np.float64]:
        mat = np.eye(4)
        mat[:3, :3] = self.rotation
        mat[:3, 3] = self.translation
        return mat

    def as_quaternion(self) -> npt.NDArray[np.float64]:
        """Rotation as (x, y, z, w)."""
        return Rotation.from_matrix(self.rotation).as_quat()

    def apply(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim == 1:
            return self.rotation @ arr + self.translation
        return arr @ self.rotation.T + self.translation

    def apply_vector(self, vectors: npt.ArrayLike) -> npt.NDArray[np.float64]:
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim == 1:
            return self.rotation @ arr
        return arr @ self.rotation.T

    def compose(self, other: RigidTransform) -> RigidTransform:
        """self after other: x -> self(other(x))."""
        return RigidTransform(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return self.compose(other)

    def inverse(self) -> RigidTransform:
        rot_t = self.rotation.T
        return RigidTransform(rot_t, -rot_t @ self.translation)

    def rotation_angle_deg(self) -> float:
        cos_angle = (np.trace(self.rotation) - 1.0) / 2.0
        return float(np.degrees(np.arccos(np.clip(cos_angle, -1.0, 1.0))))

    def allclose(self, other: RigidTransform, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol)
            and np.allclose(self.translation, other.translation, atol=atol)
        )

    def to_dict(self) -> dict[str, list[float]]:
        return {
            "quaternion_xyzw": [float(v) for v in self.as_quaternion()],
            "translation": [float(v) for v in self.translation],
        }

    @classmethod
    def from_dict(cls, data: dict[str, list[float]]) -> RigidTransform:
        return cls.from_quaternion(data["quaternion_xyzw"], data["translation"])
