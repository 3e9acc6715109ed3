"""Least-squares plane and sphere fits."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from scipy.optimize import least_squares

from ..core import GeometryError
from .primitives import Plane, Sphere
from .transform import as_points, as_vector, unit

RANK_TOL = 1e-10


class PlaneFit(NamedTuple):
    plane: Plane
    rms: float


class SphereFit(NamedTuple):
    sphere: Sphere
    rms: float


def fit_plane(
    points: npt.ArrayLike,
    reference_point: npt.ArrayLike | None = None,
    reference_direction: npt.ArrayLike = (0.0, 0.0, 1.0),
    label: str = "",
) -> PlaneFit:
    """Total-least-squares plane through the centroid.

    The normal is the smallest right singular vector of the centred points.
    Its sign points toward reference_point when one is given, otherwise it
    makes a non-negative angle with reference_direction.
    """
    pts = as_points(points)
    if len(pts) < 3:
        raise GeometryError(f"plane fit needs at least 3 points, got {len(pts)}")
    centroid = pts.mean(axis=0)
    _, singular, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    if singular[1] <= RANK_TOL * max(singular[0], 1.0):
        raise GeometryError("plane fit points are collinear")
    normal = vt[2]

    if reference_point is not None:
        toward = as_vector(reference_point) - centroid
        if normal @ toward < 0:
            normal = -normal
    elif normal @ unit(reference_direction) < 0:
        normal = -normal

    plane = Plane(normal, float(normal @ centroid), label)
    residuals = pts @ plane.normal - plane.offset
    return PlaneFit(plane, float(np.sqrt(np.mean(residuals**2))))


def _sphere_residuals(params: npt.NDArray[np.float64], pts: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return np.linalg.norm(pts - params[:3], axis=1) - params[3]


def _sphere_jacobian(params: npt.NDArray[np.float64], pts: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    diff = pts - params[:3]
    dist = np.linalg.norm(diff, axis=1, keepdims=True)
    jac = np.empty((len(pts), 4))
    jac[:, :3] = -diff / np.maximum(dist, 1e-300)
    jac[:, 3] = -1.0
    return jac


def fit_sphere(points: npt.ArrayLike) -> SphereFit:
    """Algebraic sphere fit refined by geometric least squares."""
    pts = as_points(points)
    if len(pts) < 4:
        raise GeometryError(f"sphere fit needs at least 4 points, got {len(pts)}")
    singular = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if singular[2] <= RANK_TOL * max(singular[0], 1.0):
        raise GeometryError("sphere fit points are coplanar")

    # |p|^2 = 2 c.p + (r^2 - |c|^2)
    design = np.hstack([2.0 * pts, np.ones((len(pts), 1))])
    rhs = np.einsum("ij,ij->i", pts, pts)
    solution, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    center = solution[:3]
    radius_sq = solution[3] + center @ center
    if radius_sq <= 0:
        raise GeometryError("algebraic sphere fit produced a non-positive radius")
    initial = np.append(center, np.sqrt(radius_sq))

    result = least_squares(
        _sphere_residuals,
        initial,
        jac=_sphere_jacobian,
        method="lm",
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
        args=(pts,),
    )
    params = result.x if result.cost <= 0.5 * np.sum(_sphere_residuals(initial, pts) ** 2) else initial
    residuals = _sphere_residuals(params, pts)
    return SphereFit(Sphere(params[:3], float(params[3])), float(np.sqrt(np.mean(residuals**2))))
