"""Single-plane slab cuts of a triangle mesh.

A cut with kerf k along plane n.x = d leaves three solids: the kept piece
n.x >= d + k/2 (the positive side), the removed piece n.x <= d - k/2 and the
slab of material the blade takes in between. Faces are split exactly at the
two offset planes by trimesh's face slicer, then every boundary loop left on
a cutting plane is closed by a fan to the loop centroid. A watertight input
gives watertight pieces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import trimesh
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..core import GeometryError
from .mesh import TriangleMesh
from .primitives import Plane

logger = logging.getLogger(__name__)

ON_PLANE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CutVolumes:
    input: float
    kept: float
    removed: float
    slab: float

    @property
    def conservation_error(self) -> float:
        """Relative mismatch between the input volume and the three pieces."""
        return abs(self.kept + self.removed + self.slab - self.input) / max(abs(self.input), 1e-300)


@dataclass(frozen=True, eq=False)
class CutPieces:
    kept: TriangleMesh
    removed: TriangleMesh
    cut_face_points: npt.NDArray[np.float64]
    kerf: float
    volumes: CutVolumes | None = None


def _open_half(mesh: TriangleMesh, normal: npt.NDArray[np.float64], origin: npt.NDArray[np.float64]) -> TriangleMesh:
    """Surface part on the positive side of the plane through origin, open along the plane."""
    if mesh.is_empty:
        return TriangleMesh.empty()
    sliced = trimesh.intersections.slice_faces_plane(
        vertices=np.array(mesh.vertices), faces=np.array(mesh.triangles), plane_normal=normal, plane_origin=origin
    )
    # older trimesh returns (vertices, faces), newer ones add uv
    vertices, faces = sliced[0], sliced[1]
    if len(faces) == 0:
        return TriangleMesh.empty()
    return TriangleMesh.build(vertices, faces)


def cap_plane_loops(
    mesh: TriangleMesh, normal: npt.NDArray[np.float64], origin: npt.NDArray[np.float64]
) -> TriangleMesh:
    """Close the boundary loops lying on a plane, one centroid fan per loop."""
    if mesh.is_empty:
        return mesh
    surface = mesh.to_trimesh()
    # directed edges used by exactly one face
    boundary = surface.edges[trimesh.grouping.group_rows(surface.edges_sorted, require_count=1)]
    on_plane = np.abs((mesh.vertices - origin) @ normal) < ON_PLANE_TOL
    boundary = boundary[on_plane[boundary].all(axis=1)]
    if len(boundary) == 0:
        return mesh
    count = len(mesh.vertices)
    adjacency = coo_matrix((np.ones(len(boundary)), (boundary[:, 0], boundary[:, 1])), shape=(count, count))
    _, component = connected_components(adjacency, directed=False)
    loops, loop_of_edge = np.unique(component[boundary[:, 0]], return_inverse=True)
    apexes = np.array([mesh.vertices[np.unique(boundary[loop_of_edge == k])].mean(axis=0) for k in range(len(loops))])
    caps = np.column_stack([boundary[:, 1], boundary[:, 0], count + loop_of_edge.reshape(-1)])
    logger.debug("capping %d loop(s) with %d triangles", len(loops), len(caps))
    return TriangleMesh.build(np.vstack([mesh.vertices, apexes]), np.vstack([mesh.triangles, caps]), merge_tol=None)


def cut_mesh_by_plane(mesh: TriangleMesh, plane: Plane, kerf: float = 0.0, compute_volumes: bool = False) -> CutPieces:
    if kerf < 0:
        raise GeometryError(f"kerf must be >= 0, got {kerf}")
    if compute_volumes and not mesh.is_watertight:
        raise GeometryError("volume accounting needs a watertight mesh")

    normal = plane.normal
    upper = plane.point + normal * (kerf / 2.0)
    lower = plane.point - normal * (kerf / 2.0)

    kept = _open_half(mesh, normal, upper)
    removed = _open_half(mesh, -normal, lower)

    if kept.is_empty:
        face_points = np.zeros((0, 3))
    else:
        on_face = np.abs(kept.vertices @ normal - (plane.offset + kerf / 2.0)) < ON_PLANE_TOL
        face_points = np.array(kept.vertices[on_face])

    kept = cap_plane_loops(kept, normal, upper)
    removed = cap_plane_loops(removed, -normal, lower)

    volumes = None
    if compute_volumes:
        total = mesh.volume
        # inward-oriented input flips every signed volume
        sign = 1.0 if total >= 0 else -1.0
        kept_volume = sign * kept.volume
        removed_volume = sign * removed.volume
        below_upper = sign * cap_plane_loops(_open_half(mesh, -normal, upper), -normal, upper).volume
        volumes = CutVolumes(
            input=abs(total),
            kept=kept_volume,
            removed=removed_volume,
            slab=below_upper - removed_volume,
        )
        logger.debug("cut %s: volumes %s", plane.label or "plane", volumes)

    return CutPieces(kept=kept, removed=removed, cut_face_points=face_points, kerf=float(kerf), volumes=volumes)


def plane_section_segments(mesh: TriangleMesh, plane: Plane) -> npt.NDArray[np.float64]:
    """Line segments (k, 2, 3) where the plane crosses the surface."""
    if mesh.is_empty:
        return np.zeros((0, 2, 3))
    segments = trimesh.intersections.mesh_plane(mesh.to_trimesh(), plane_normal=plane.normal, plane_origin=plane.point)
    return np.asarray(segments, dtype=np.float64).reshape(-1, 2, 3)


def section_centroid(mesh: TriangleMesh, plane: Plane) -> npt.NDArray[np.float64] | None:
    """Length-weighted centroid of the plane/surface intersection curve, or None when they miss."""
    segments = plane_section_segments(mesh, plane)
    if len(segments) == 0:
        return None
    lengths = np.linalg.norm(segments[:, 1] - segments[:, 0], axis=1)
    midpoints = segments.mean(axis=1)
    if lengths.sum() <= 0:
        return midpoints.mean(axis=0)
    return (midpoints * lengths[:, None]).sum(axis=0) / lengths.sum()


def plane_intersects(mesh: TriangleMesh, plane: Plane) -> bool:
    """True when mesh vertices lie strictly on both sides of the plane."""
    if mesh.is_empty:
        return False
    distances = mesh.vertices @ plane.normal - plane.offset
    return bool(distances.max() > 0 and distances.min() < 0)
