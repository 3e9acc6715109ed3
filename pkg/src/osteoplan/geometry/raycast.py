"""First-hit ray casting against a triangle mesh (Moller-Trumbore, vectorized)."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from .mesh import TriangleMesh
from .transform import as_points

PARALLEL_TOL = 1e-12
EDGE_TOL = 1e-12
CHUNK = 256


class RayHits(NamedTuple):
    points: npt.NDArray[np.float64]  # NaN rows where the ray misses
    hit: npt.NDArray[np.bool_]
    triangle: npt.NDArray[np.int64]  # -1 on a miss
    distance: npt.NDArray[np.float64]


def cast_rays(origins: npt.ArrayLike, directions: npt.ArrayLike, mesh: TriangleMesh) -> RayHits:
    """Nearest intersection with t > 0 of each ray origin + t * direction."""
    orig = as_points(origins)
    dirs = as_points(directions)
    if len(orig) == 1 and len(dirs) > 1:
        orig = np.repeat(orig, len(dirs), axis=0)
    count = len(dirs)
    best_t = np.full(count, np.inf)
    best_tri = np.full(count, -1, dtype=np.int64)
    if not mesh.is_empty:
        tri = mesh.triangle_vertices
        v0 = tri[:, 0]
        edge1 = tri[:, 1] - v0
        edge2 = tri[:, 2] - v0
        for start in range(0, count, CHUNK):
            stop = min(start + CHUNK, count)
            o = orig[start:stop, None, :]
            d = dirs[start:stop, None, :]
            pvec = np.cross(d, edge2)
            det = np.einsum("rtk,tk->rt", pvec, edge1)
            valid = np.abs(det) > PARALLEL_TOL
            inv_det = np.where(valid, 1.0 / np.where(valid, det, 1.0), 0.0)
            tvec = o - v0
            u = np.einsum("rtk,rtk->rt", tvec, pvec) * inv_det
            qvec = np.cross(tvec, edge1)
            v = np.einsum("rtk,rtk->rt", d, qvec) * inv_det
            t = np.einsum("rtk,tk->rt", qvec, edge2) * inv_det
            valid &= (u >= -EDGE_TOL) & (v >= -EDGE_TOL) & (u + v <= 1.0 + EDGE_TOL) & (t > 0)
            t = np.where(valid, t, np.inf)
            nearest = np.argmin(t, axis=1)
            nearest_t = t[np.arange(stop - start), nearest]
            best_t[start:stop] = nearest_t
            best_tri[start:stop] = np.where(np.isfinite(nearest_t), nearest, -1)

    hit = np.isfinite(best_t)
    points = np.full((count, 3), np.nan)
    points[hit] = orig[hit] + dirs[hit] * best_t[hit, None]
    return RayHits(points=points, hit=hit, triangle=best_tri, distance=np.where(hit, best_t, np.nan))
