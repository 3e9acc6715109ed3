"""Registration session file and its report.

Session: {fiducials, true_pose, noise parameters, seed, observation count, targets}.
Report: {transform, fre, tre_at_targets[], tracking errors per observation}.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import orjson
from pydantic import BaseModel, Field, ValidationError, field_validator

from ..core import SchemaError
from ..geometry import RigidTransform
from ..planning.schema import PoseDocument
from .base import (
    PoseSource,
    TrackedPose,
    simulate_registration,
    simulate_tracking,
    target_registration_error,
    tetrahedral_marker,
)

SCHEMA_VERSION = "1.0"


def _identity_pose() -> PoseDocument:
    return PoseDocument(quaternion_xyzw=[0.0, 0.0, 0.0, 1.0], translation=[0.0, 0.0, 0.0])


class SessionDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    # empty -> tetrahedral marker of marker_edge mm around the origin
    fiducials: list[list[float]] = []
    marker_edge: float = Field(default=20.0, gt=0)
    true_pose: PoseDocument = Field(default_factory=_identity_pose)
    marker_mount: PoseDocument = Field(default_factory=_identity_pose)
    fiducial_noise: float = Field(default=0.1, ge=0)
    tracking_rotation_noise: float = Field(default=0.2, ge=0)
    tracking_translation_noise: float = Field(default=0.2, ge=0)
    observation_count: int = Field(default=20, ge=0)
    seed: int = 0
    targets: list[list[float]] = []

    @field_validator("fiducials", "targets")
    @classmethod
    def three_coordinates(cls, value: list[list[float]]) -> list[list[float]]:
        if any(len(point) != 3 for point in value):
            raise ValueError("points must have three coordinates")
        return value


class TrackingErrorDocument(BaseModel):
    timestamp: float
    rotation_deg: float
    translation_mm: float


class ProjectionDocument(BaseModel):
    samples: int
    hits: int
    coverage: float
    polyline: list[list[float]]


class RegistrationReportDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: str = "registration"
    transform: PoseDocument
    fre: float
    tre_at_targets: list[float]
    findings: list[str] = []
    tracking: list[TrackingErrorDocument] = []
    projection: ProjectionDocument | None = None


def _pose(document: PoseDocument) -> RigidTransform:
    return RigidTransform.from_quaternion(document.quaternion_xyzw, document.translation)


def run_session(session: SessionDocument) -> RegistrationReportDocument:
    """Simulate one registration followed by a static tracking sequence."""
    rng = np.random.default_rng(session.seed)
    marker = np.asarray(session.fiducials) if session.fiducials else tetrahedral_marker(session.marker_edge)
    truth = _pose(session.true_pose)
    targets = np.asarray(session.targets) if session.targets else None
    simulated = simulate_registration(marker, truth, session.fiducial_noise, rng, targets)

    mount = _pose(session.marker_mount)
    initial = TrackedPose(simulated.result.transform, 0.0, PoseSource.REGISTRATION)
    poses = simulate_tracking(
        initial,
        mount,
        [truth] * session.observation_count,
        session.tracking_rotation_noise,
        session.tracking_translation_noise,
        rng,
    )
    tracking = [
        TrackingErrorDocument(
            timestamp=pose.timestamp,
            rotation_deg=pose.pose.inverse().compose(truth).rotation_angle_deg(),
            translation_mm=target_registration_error(truth, pose.pose, mount.translation),
        )
        for pose in poses
    ]
    return RegistrationReportDocument(
        transform=PoseDocument(**simulated.result.transform.to_dict()),
        fre=simulated.result.fre,
        tre_at_targets=list(simulated.tre),
        findings=[str(finding) for finding in simulated.result.findings],
        tracking=tracking,
    )


def read_session(path: str | Path) -> SessionDocument:
    try:
        return SessionDocument.model_validate(orjson.loads(Path(path).read_bytes()))
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise SchemaError(f"invalid registration session {path}: {exc}") from exc


def report_bytes(report: RegistrationReportDocument) -> bytes:
    return orjson.dumps(report.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)
