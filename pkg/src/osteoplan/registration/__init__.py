"""Vision-guidance chain: fiducial registration, marker tracking and pattern projection."""

from .base import (
    FiducialSet,
    PoseSource,
    RegistrationResult,
    SimulatedRegistration,
    TrackedPose,
    fiducial_rms,
    marker_noise,
    register_rigid,
    simulate_registration,
    simulate_tracking,
    target_registration_error,
    tetrahedral_marker,
    track_update,
)
from .projection import ProjectedPattern, ProjectorModel, project_pattern, rectangle_outline
from .session import (
    ProjectionDocument,
    RegistrationReportDocument,
    SessionDocument,
    read_session,
    report_bytes,
    run_session,
)

__all__ = [
    "FiducialSet",
    "PoseSource",
    "ProjectedPattern",
    "ProjectionDocument",
    "ProjectorModel",
    "RegistrationReportDocument",
    "RegistrationResult",
    "SessionDocument",
    "SimulatedRegistration",
    "TrackedPose",
    "fiducial_rms",
    "marker_noise",
    "project_pattern",
    "read_session",
    "rectangle_outline",
    "register_rigid",
    "report_bytes",
    "run_session",
    "simulate_registration",
    "simulate_tracking",
    "target_registration_error",
    "tetrahedral_marker",
    "track_update",
]
