"""STL and PLY mesh files, read and written through trimesh's exchange modules.

Coordinates are read as millimeters; no unit metadata in the file is trusted.
PLY heatmaps are written as ASCII with the per-vertex ``dist_mm`` channel.
"""

from __future__ import annotations

import io
import logging
import struct
from pathlib import Path

import numpy as np
import trimesh
from trimesh.exchange.ply import export_ply
from trimesh.exchange.stl import HeaderError, export_stl

from ..core import MeshFormatError
from .mesh import DEGENERATE_AREA, MERGE_TOL, TriangleMesh, compact, merge_vertices, triangle_areas

logger = logging.getLogger(__name__)

SCALAR_PROPERTY = "dist_mm"
FILE_TYPES = {".stl": "stl", ".ply": "ply"}
# what trimesh's STL and PLY parsers raise on malformed records
PARSE_ERRORS = (ValueError, IndexError, KeyError, TypeError, struct.error, UnicodeDecodeError, HeaderError)


def load_mesh(path: str | Path) -> TriangleMesh:
    """Read an STL or PLY file into a cleaned TriangleMesh.

    Vertices closer than 1e-6 mm are merged and zero-area triangles dropped
    with a warning; a file that ends up without triangles is an error.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise MeshFormatError(f"unreadable file {path}: {exc}") from exc

    file_type = "ply" if data.startswith(b"ply") else FILE_TYPES.get(path.suffix.lower())
    if file_type is None:
        raise MeshFormatError(f"unsupported mesh format {path.suffix!r}")
    try:
        loaded = trimesh.load_mesh(io.BytesIO(data), file_type=file_type, process=False)
    except PARSE_ERRORS as exc:
        raise MeshFormatError(f"malformed records in {path.name}: {exc}") from exc
    if not isinstance(loaded, trimesh.Trimesh) or len(loaded.faces) == 0:
        raise MeshFormatError(f"{path} contains zero triangles")

    vertices = np.asarray(loaded.vertices, dtype=np.float64).reshape(-1, 3)
    triangles = np.asarray(loaded.faces, dtype=np.int64).reshape(-1, 3)
    if triangles.min() < 0 or triangles.max() >= len(vertices):
        raise MeshFormatError(f"malformed records: face index out of range 0..{len(vertices) - 1}")
    if not np.isfinite(vertices).all():
        raise MeshFormatError(f"{path} holds non-finite coordinates")

    vertices, triangles = merge_vertices(vertices, triangles, MERGE_TOL)
    degenerate = triangle_areas(vertices, triangles) <= DEGENERATE_AREA
    if degenerate.any():
        logger.warning("%s: dropped %d degenerate triangles", path.name, int(degenerate.sum()))
        triangles = triangles[~degenerate]
    if len(triangles) == 0:
        raise MeshFormatError(f"{path} contains zero triangles")
    return TriangleMesh(*compact(vertices, triangles))


def stl_bytes(mesh: TriangleMesh) -> bytes:
    """Binary little-endian STL with per-facet normals."""
    return bytes(export_stl(mesh.to_trimesh()))


def ply_bytes(mesh: TriangleMesh) -> bytes:
    """ASCII PLY; the scalar channel, when present, goes out as the dist_mm vertex property."""
    surface = mesh.to_trimesh()
    if mesh.scalars is not None:
        surface.vertex_attributes[SCALAR_PROPERTY] = np.array(mesh.scalars, dtype=np.float64)
    return bytes(export_ply(surface, encoding="ascii", vertex_normal=False, include_attributes=True))


def save_stl(mesh: TriangleMesh, path: str | Path) -> None:
    Path(path).write_bytes(stl_bytes(mesh))


def save_ply(mesh: TriangleMesh, path: str | Path) -> None:
    Path(path).write_bytes(ply_bytes(mesh))
