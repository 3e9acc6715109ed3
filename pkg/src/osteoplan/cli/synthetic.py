"""Synthetic hemipelvis specimens for the demo and the tests.

The periacetabular region is a subdivided block around the hip center,
built in pelvic-frame coordinates (origin at the ASIS midpoint, X ventral,
Y toward the left, Z cranial) and moved into a specimen-specific CT pose.
Landmarks travel with it, so build_pelvic_frame recovers the inverse pose.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..geometry import LandmarkSet, RigidTransform, TriangleMesh
from ..planning import Side

DIVISIONS = 12
# block extent around the hip center in frame axes: (dorsal, ventral), (-y, +y), (caudal, cranial)
BLOCK_EXTENT = ((-50.0, 45.0), (-50.0, 50.0), (-55.0, 60.0))
LEFT_HIP_CENTER = np.array([-25.0, 85.0, -75.0])


def box_mesh(lower: npt.ArrayLike, upper: npt.ArrayLike, divisions: int = DIVISIONS) -> TriangleMesh:
    """Watertight axis-aligned box, every face split into divisions x divisions quads, normals outward."""
    low = np.asarray(lower, dtype=np.float64)
    high = np.asarray(upper, dtype=np.float64)
    steps = np.linspace(0.0, 1.0, divisions + 1)
    vertices: list[npt.NDArray[np.float64]] = []
    triangles: list[npt.NDArray[np.int64]] = []
    offset = 0
    for axis in range(3):
        u_axis, v_axis = (axis + 1) % 3, (axis + 2) % 3
        for outward, level in ((1.0, high[axis]), (-1.0, low[axis])):
            grid = np.zeros((divisions + 1, divisions + 1, 3))
            grid[..., axis] = level
            grid[..., u_axis] = (low[u_axis] + steps * (high[u_axis] - low[u_axis]))[:, None]
            grid[..., v_axis] = (low[v_axis] + steps * (high[v_axis] - low[v_axis]))[None, :]
            index = np.arange((divisions + 1) ** 2).reshape(divisions + 1, divisions + 1) + offset
            p00, p10 = index[:-1, :-1].ravel(), index[1:, :-1].ravel()
            p01, p11 = index[:-1, 1:].ravel(), index[1:, 1:].ravel()
            # e_u x e_v = e_axis, so this winding faces +axis
            faces = np.vstack([np.column_stack([p00, p10, p11]), np.column_stack([p00, p11, p01])])
            if outward < 0:
                faces = faces[:, ::-1]
            vertices.append(grid.reshape(-1, 3))
            triangles.append(faces)
            offset += (divisions + 1) ** 2
    return TriangleMesh.build(np.vstack(vertices), np.vstack(triangles))


@dataclass(frozen=True, eq=False)
class SyntheticSpecimen:
    specimen_id: str
    side: Side
    mesh: TriangleMesh
    landmarks: LandmarkSet
    hip_center: npt.NDArray[np.float64]
    ct_pose: RigidTransform


def specimen_id(index: int) -> str:
    return f"S{index + 1:02d}"


def synthetic_hemipelvis(specimen_index: int, side: Side | str, seed: int = 0) -> SyntheticSpecimen:
    """One hemipelvis of a synthetic specimen; both sides of a specimen share its pelvis dimensions."""
    side = Side(side)
    name = specimen_id(specimen_index)
    shape_rng = np.random.default_rng([seed, zlib.crc32(name.encode())])
    half_asis = shape_rng.uniform(110.0, 125.0)
    psis_depth = shape_rng.uniform(140.0, 160.0)
    half_psis = shape_rng.uniform(35.0, 45.0)
    hip_jitter = shape_rng.uniform(-3.0, 3.0, size=3)

    pose_rng = np.random.default_rng([seed, zlib.crc32(f"{name}:{side.value}".encode())])
    ct_pose = RigidTransform.random(pose_rng, translation_scale=200.0)

    mirror = np.array([1.0, -1.0 if side is Side.RIGHT else 1.0, 1.0])
    hip_local = (LEFT_HIP_CENTER + hip_jitter) * mirror
    extent = np.array(BLOCK_EXTENT)
    block = box_mesh(hip_local + extent[:, 0], hip_local + extent[:, 1])
    landmarks = LandmarkSet(
        asis_left=(0.0, half_asis, 0.0),
        asis_right=(0.0, -half_asis, 0.0),
        psis_left=(-psis_depth, half_psis, 0.0),
        psis_right=(-psis_depth, -half_psis, 0.0),
        hip_center=hip_local,
    )
    return SyntheticSpecimen(
        specimen_id=name,
        side=side,
        mesh=block.transformed(ct_pose),
        landmarks=landmarks.transformed(ct_pose),
        hip_center=ct_pose.apply(hip_local),
        ct_pose=ct_pose,
    )
