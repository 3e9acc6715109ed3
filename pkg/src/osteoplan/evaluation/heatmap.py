"""Distance-error field between planned and resected planes, for PLY export."""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

from ..geometry import Plane, TriangleMesh

PARALLEL_TOL = 1e-9


def plane_gap_along_normal(points: npt.ArrayLike, planned: Plane, resected: Plane) -> npt.NDArray[np.float64]:
    """Signed travel along the planned normal from each point's foot on the planned plane to the resected plane.

    NaN where the resected plane is parallel to the planned normal.
    """
    feet = planned.project(points)
    along = float(resected.normal @ planned.normal)
    if abs(along) < PARALLEL_TOL:
        return np.full(len(feet), np.nan)
    return -(feet @ resected.normal - resected.offset) / along


def heatmap_field(
    mesh: TriangleMesh, planned: Plane, resected: Plane | None = None, kerf: float = 0.0
) -> TriangleMesh:
    """Mesh carrying the per-vertex distance error in mm.

    With a resected plane the field is the gap between the two planes measured
    along the planned normal. Without one the mesh is taken to be the cut face
    itself and each vertex's own distance to the planned plane is used, less
    the half kerf.
    """
    if resected is None:
        field = np.asarray(planned.signed_distance(mesh.vertices), dtype=np.float64).reshape(-1) - kerf / 2.0
    else:
        field = plane_gap_along_normal(mesh.vertices, planned, resected)
    return mesh.with_scalars(field)
