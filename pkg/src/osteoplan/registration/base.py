"""Fiducial registration, target errors and marker-based pose tracking.

The 3D marker is a small rigid fiducial set screwed to the bone; the scanner
observes it and registers the bone to its CT model. A 2D tracking marker that
snap-fits on the same mount keeps the pose current without re-registering.
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from ..core import Finding, RegistrationError
from ..geometry import RigidTransform, as_points

logger = logging.getLogger(__name__)

COLLINEAR_TOL = 1e-9
FRAME_INTERVAL_S = 1.0 / 30.0


@dataclass(frozen=True, eq=False)
class FiducialSet:
    """Model (CT) points and their scanner observations, matched by index."""

    model_points: npt.NDArray[np.float64]
    observed_points: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        model = as_points(self.model_points)
        observed = as_points(self.observed_points)
        if len(model) != len(observed):
            raise RegistrationError(f"fiducial length mismatch: {len(model)} model vs {len(observed)} observed")
        if len(model) < 3:
            raise RegistrationError(f"registration needs at least 3 fiducials, got {len(model)}")
        spread = np.linalg.svd(model - model.mean(axis=0), compute_uv=False)
        if spread[1] <= COLLINEAR_TOL * max(float(spread[0]), 1.0):
            raise RegistrationError("collinear fiducials leave the rotation under-determined")
        object.__setattr__(self, "model_points", model)
        object.__setattr__(self, "observed_points", observed)

    def __len__(self) -> int:
        return len(self.model_points)


@dataclass(frozen=True, eq=False)
class RegistrationResult:
    transform: RigidTransform
    fre: float
    findings: tuple[Finding, ...] = ()


def fiducial_rms(transform: RigidTransform, fiducials: FiducialSet) -> float:
    residual = transform.apply(fiducials.model_points) - fiducials.observed_points
    return float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))


def register_rigid(fiducials: FiducialSet) -> RegistrationResult:
    """Least-squares rigid alignment of model onto observed points (Kabsch).

    Mirrored observations cannot be matched by a proper rotation; the best
    proper rotation is returned together with a "reflection" finding.
    """
    model = fiducials.model_points
    observed = fiducials.observed_points
    model_centroid = model.mean(axis=0)
    observed_centroid = observed.mean(axis=0)
    covariance = (model - model_centroid).T @ (observed - observed_centroid)
    u, singular, vt = np.linalg.svd(covariance)
    d = float(np.sign(np.linalg.det(vt.T @ u.T))) or 1.0
    rotation = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    transform = RigidTransform(rotation, observed_centroid - rotation @ model_centroid)

    findings: tuple[Finding, ...] = ()
    # planar fiducials have a zero third singular value; the flip is free there
    if d < 0 and singular[2] > COLLINEAR_TOL * max(float(singular[0]), 1.0):
        findings = (Finding("reflection", "observed fiducials are mirrored; kept the best proper rotation"),)
        logger.warning("%s", findings[0])
    return RegistrationResult(transform, fiducial_rms(transform, fiducials), findings)


def target_registration_error(
    transform_true: RigidTransform, transform_est: RigidTransform, target: npt.ArrayLike
) -> float:
    """|T_true(target) - T_est(target)| in mm."""
    point = np.asarray(target, dtype=np.float64).reshape(3)
    return float(np.linalg.norm(transform_true.apply(point) - transform_est.apply(point)))


def tetrahedral_marker(edge_mm: float = 20.0, center: npt.ArrayLike = (0.0, 0.0, 0.0)) -> npt.NDArray[np.float64]:
    """Four fiducials on a regular tetrahedron with the given edge length."""
    if edge_mm <= 0:
        raise RegistrationError(f"marker edge must be positive, got {edge_mm}")
    corners = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])
    # cube corners with an even number of minus signs; their edge is 2*sqrt(2)
    return corners * (edge_mm / (2.0 * np.sqrt(2.0))) + np.asarray(center, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SimulatedRegistration:
    result: RegistrationResult
    transform_true: RigidTransform
    tre: tuple[float, ...] = field(default=())


def simulate_registration(
    marker: npt.ArrayLike,
    transform_true: RigidTransform,
    noise_sd: float,
    rng: np.random.Generator,
    targets: npt.ArrayLike | None = None,
) -> SimulatedRegistration:
    """Observe the marker through transform_true with isotropic noise, register, report TRE."""
    model = as_points(marker)
    observed = transform_true.apply(model) + rng.normal(0.0, noise_sd, size=model.shape)
    result = register_rigid(FiducialSet(model, observed))
    tre: tuple[float, ...] = ()
    if targets is not None:
        tre = tuple(
            target_registration_error(transform_true, result.transform, target) for target in as_points(targets)
        )
    logger.debug("registration fre %.4f mm over %d fiducials", result.fre, len(model))
    return SimulatedRegistration(result, transform_true, tre)


class PoseSource(str, enum.Enum):
    REGISTRATION = "registration"
    TRACKING_UPDATE = "tracking-update"


@dataclass(frozen=True, eq=False)
class TrackedPose:
    pose: RigidTransform
    timestamp: float
    source: PoseSource = PoseSource.REGISTRATION


def track_update(
    prev: TrackedPose,
    marker_observation: RigidTransform,
    marker_mount: RigidTransform,
    timestamp: float | None = None,
) -> TrackedPose:
    """Bone pose from a tracking-marker observation: observation o mount^-1.

    ``marker_mount`` places the marker in bone coordinates; the previous pose
    only supplies the clock.
    """
    stamp = prev.timestamp + FRAME_INTERVAL_S if timestamp is None else timestamp
    return TrackedPose(marker_observation.compose(marker_mount.inverse()), stamp, PoseSource.TRACKING_UPDATE)


def marker_noise(rotation_sd_deg: float, translation_sd_mm: float, rng: np.random.Generator) -> RigidTransform:
    """Small random motion in the marker's own frame."""
    rotvec = np.deg2rad(rng.normal(0.0, rotation_sd_deg, size=3))
    return RigidTransform.from_rotvec(rotvec, rng.normal(0.0, translation_sd_mm, size=3))


def simulate_tracking(
    initial: TrackedPose,
    marker_mount: RigidTransform,
    motions: Sequence[RigidTransform],
    rotation_sd_deg: float,
    translation_sd_mm: float,
    rng: np.random.Generator,
) -> list[TrackedPose]:
    """Fold track_update over noisy marker observations of the given true bone poses."""
    poses: list[TrackedPose] = []
    current = initial
    for motion in motions:
        observation = motion.compose(marker_mount).compose(marker_noise(rotation_sd_deg, translation_sd_mm, rng))
        current = track_update(current, observation, marker_mount)
        poses.append(current)
    return poses
