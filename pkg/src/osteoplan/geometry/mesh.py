"""Indexed triangle surface in millimeters."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import numpy.typing as npt
import trimesh
from scipy.spatial import cKDTree

from ..core import GeometryError
from .transform import RigidTransform

logger = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-12
MERGE_TOL = 1e-6


def triangle_areas(vertices: npt.NDArray[np.float64], triangles: npt.NDArray[np.int64]) -> npt.NDArray[np.float64]:
    if len(triangles) == 0:
        return np.zeros(0)
    tri = vertices[triangles]
    return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Vertices (n, 3), triangles (m, 3) and an optional per-vertex scalar channel.

    An empty mesh (no triangles) is allowed: it is what one side of a cut
    returns when the plane misses the solid.
    """

    vertices: npt.NDArray[np.float64]
    triangles: npt.NDArray[np.int64]
    scalars: npt.NDArray[np.float64] | None = field(default=None)

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise GeometryError("triangle index out of range")
        if np.any(triangle_areas(vertices, triangles) <= DEGENERATE_AREA):
            raise GeometryError("mesh contains degenerate triangles")
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        if self.scalars is not None:
            scalars = np.array(self.scalars, dtype=np.float64).reshape(-1)
            if len(scalars) != len(vertices):
                raise GeometryError("scalar channel length does not match vertex count")
            scalars.setflags(write=False)
            object.__setattr__(self, "scalars", scalars)

    @classmethod
    def empty(cls) -> TriangleMesh:
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @classmethod
    def build(
        cls,
        vertices: npt.ArrayLike,
        triangles: npt.ArrayLike,
        merge_tol: float | None = MERGE_TOL,
    ) -> TriangleMesh:
        """Clean raw arrays: merge close vertices, drop degenerate faces, drop unused vertices."""
        verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if len(tris) and (tris.min() < 0 or tris.max() >= len(verts)):
            raise GeometryError("triangle index out of range")
        if merge_tol is not None and len(verts):
            verts, tris = merge_vertices(verts, tris, merge_tol)
        areas = triangle_areas(verts, tris)
        degenerate = areas <= DEGENERATE_AREA
        if degenerate.any():
            logger.debug("dropping %d degenerate triangles", int(degenerate.sum()))
            tris = tris[~degenerate]
        return cls(*compact(verts, tris))

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    @property
    def triangle_vertices(self) -> npt.NDArray[np.float64]:
        return self.vertices[self.triangles]

    @property
    def bounds(self) -> npt.NDArray[np.float64]:
        return np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)])

    @property
    def area(self) -> float:
        return float(triangle_areas(self.vertices, self.triangles).sum())

    def to_trimesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(vertices=np.array(self.vertices), faces=np.array(self.triangles), process=False)

    @property
    def is_watertight(self) -> bool:
        if self.is_empty:
            return False
        return bool(self.to_trimesh().is_watertight)

    @property
    def volume(self) -> float:
        """Enclosed volume of a closed surface."""
        if self.is_empty:
            return 0.0
        return float(self.to_trimesh().volume)

    def transformed(self, transform: RigidTransform) -> TriangleMesh:
        return replace(self, vertices=transform.apply(self.vertices))

    def with_scalars(self, scalars: npt.ArrayLike) -> TriangleMesh:
        return replace(self, scalars=np.asarray(scalars, dtype=np.float64))


def compact(
    vertices: npt.NDArray[np.float64], triangles: npt.NDArray[np.int64]
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]:
    """Drop vertices no triangle references, keeping order."""
    if len(triangles) == 0:
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)
    used, inverse = np.unique(triangles.reshape(-1), return_inverse=True)
    return vertices[used], inverse.reshape(-1, 3).astype(np.int64)


def merge_vertices(
    vertices: npt.NDArray[np.float64], triangles: npt.NDArray[np.int64], tol: float = MERGE_TOL
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]:
    """Merge vertices closer than tol; each vertex maps to the lowest index in reach."""
    tree = cKDTree(vertices)
    representative = np.arange(len(vertices))
    for i, j in sorted(tree.query_pairs(r=tol)):
        representative[j] = min(representative[j], representative[i])
    # resolve chains so every vertex points at a root
    while True:
        nxt = representative[representative]
        if np.array_equal(nxt, representative):
            break
        representative = nxt
    roots, inverse = np.unique(representative, return_inverse=True)
    return vertices[roots], inverse[triangles].astype(np.int64)
