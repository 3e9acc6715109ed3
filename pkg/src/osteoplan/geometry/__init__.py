"""Mesh and analytic-geometry kernel."""

from .cutting import (
    CutPieces,
    CutVolumes,
    cut_mesh_by_plane,
    plane_intersects,
    plane_section_segments,
    section_centroid,
)
from .fitting import PlaneFit, SphereFit, fit_plane, fit_sphere
from .frame import PelvicFrame, YAxisSign, build_pelvic_frame
from .io import load_mesh, ply_bytes, save_ply, save_stl, stl_bytes
from .mesh import TriangleMesh
from .primitives import LandmarkSet, Plane, Sphere, signed_point_plane_distance
from .raycast import RayHits, cast_rays
from .transform import RigidTransform, as_points, as_vector, unit

__all__ = [
    "CutPieces",
    "CutVolumes",
    "LandmarkSet",
    "PelvicFrame",
    "Plane",
    "PlaneFit",
    "RayHits",
    "RigidTransform",
    "Sphere",
    "SphereFit",
    "TriangleMesh",
    "YAxisSign",
    "as_points",
    "as_vector",
    "build_pelvic_frame",
    "cast_rays",
    "cut_mesh_by_plane",
    "fit_plane",
    "fit_sphere",
    "load_mesh",
    "plane_intersects",
    "plane_section_segments",
    "ply_bytes",
    "save_ply",
    "save_stl",
    "section_centroid",
    "signed_point_plane_distance",
    "stl_bytes",
    "unit",
]
