from __future__ import annotations

from itertools import combinations
from pathlib import Path

import numpy as np
import orjson
import pytest

from osteoplan.cli.synthetic import box_mesh
from osteoplan.core import RegistrationError, SchemaError
from osteoplan.geometry import RigidTransform, TriangleMesh
from osteoplan.registration import (
    FiducialSet,
    PoseSource,
    ProjectorModel,
    SessionDocument,
    TrackedPose,
    fiducial_rms,
    project_pattern,
    read_session,
    rectangle_outline,
    register_rigid,
    report_bytes,
    run_session,
    simulate_registration,
    simulate_tracking,
    target_registration_error,
    tetrahedral_marker,
    track_update,
)

FIDUCIALS = np.array(
    [
        [0.0, 0.0, 0.0],
        [50.0, 0.0, 0.0],
        [0.0, 40.0, 0.0],
        [0.0, 0.0, 30.0],
        [35.0, 25.0, 10.0],
        [-20.0, 30.0, 45.0],
    ]
)


class TestFiducialSet:
    def test_length_mismatch(self) -> None:
        with pytest.raises(RegistrationError, match="mismatch"):
            FiducialSet(FIDUCIALS, FIDUCIALS[:5])

    def test_needs_three_points(self) -> None:
        with pytest.raises(RegistrationError):
            FiducialSet(FIDUCIALS[:2], FIDUCIALS[:2])

    def test_collinear_points(self) -> None:
        line = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [5.0, 5.0, 5.0]])
        with pytest.raises(RegistrationError, match="collinear"):
            FiducialSet(line, line)


class TestRegisterRigid:
    def test_identity(self) -> None:
        result = register_rigid(FiducialSet(FIDUCIALS, FIDUCIALS))
        assert result.transform.allclose(RigidTransform.identity())
        assert result.fre < 1e-12
        assert result.findings == ()

    def test_exact_recovery_of_a_constructed_motion(self) -> None:
        truth = RigidTransform.from_euler_deg((0.0, 0.0, 90.0), (5.0, 0.0, 0.0))
        result = register_rigid(FiducialSet(FIDUCIALS, truth.apply(FIDUCIALS)))
        assert result.transform.allclose(truth, atol=1e-9)
        assert result.fre < 1e-9

    def test_exact_recovery_of_random_motions(self, rng: np.random.Generator) -> None:
        for _ in range(20):
            truth = RigidTransform.random(rng)
            result = register_rigid(FiducialSet(FIDUCIALS, truth.apply(FIDUCIALS)))
            assert result.transform.allclose(truth, atol=1e-9)

    def test_noisy_fiducials(self) -> None:
        truth = RigidTransform.from_euler_deg((10.0, -5.0, 30.0), (20.0, 10.0, -15.0))
        centroid = FIDUCIALS.mean(axis=0)
        fres = []
        for seed in range(50):
            simulated = simulate_registration(FIDUCIALS, truth, 0.1, np.random.default_rng(seed), [centroid])
            fres.append(simulated.result.fre)
            assert simulated.tre[0] < 0.5
        assert 0.03 <= min(fres)
        assert max(fres) <= 0.3
        # 3N - 6 residual degrees of freedom for N = 6
        assert np.mean(fres) == pytest.approx(0.1 * np.sqrt(12.0 / 6.0), rel=0.25)

    def test_solution_is_a_local_minimum(self, rng: np.random.Generator) -> None:
        truth = RigidTransform.random(rng)
        fiducials = FiducialSet(FIDUCIALS, truth.apply(FIDUCIALS) + rng.normal(0.0, 0.5, size=FIDUCIALS.shape))
        result = register_rigid(fiducials)
        for _ in range(20):
            nudge = RigidTransform.from_rotvec(rng.normal(0.0, 1e-3, size=3), rng.normal(0.0, 1e-2, size=3))
            assert fiducial_rms(nudge.compose(result.transform), fiducials) >= result.fre - 1e-12

    def test_mirrored_observation_gives_a_finding(self) -> None:
        mirrored = FIDUCIALS * np.array([1.0, 1.0, -1.0])
        result = register_rigid(FiducialSet(FIDUCIALS, mirrored))
        assert [finding.code for finding in result.findings] == ["reflection"]
        assert np.linalg.det(result.transform.rotation) == pytest.approx(1.0)


class TestTargetRegistrationError:
    def test_identical_transforms(self) -> None:
        pose = RigidTransform.from_rotvec((0.1, 0.2, 0.3), (1.0, 2.0, 3.0))
        assert target_registration_error(pose, pose, (10.0, 20.0, 30.0)) == pytest.approx(0.0, abs=1e-12)

    def test_translation_error_is_uniform(self) -> None:
        shifted = RigidTransform.from_rotvec((0.0, 0.0, 0.0), (0.0, 1.0, 0.0))
        for target in [(0.0, 0.0, 0.0), (100.0, -50.0, 20.0)]:
            assert target_registration_error(RigidTransform.identity(), shifted, target) == pytest.approx(1.0)

    @pytest.mark.parametrize("angle", [0.5, 2.0, 10.0])
    def test_rotation_error_grows_with_distance(self, angle: float) -> None:
        rotated = RigidTransform.about_axis((0.0, 0.0, 1.0), angle, (0.0, 0.0, 0.0))
        radius = 80.0
        expected = 2.0 * radius * np.sin(np.radians(angle) / 2.0)
        assert target_registration_error(RigidTransform.identity(), rotated, (radius, 0.0, 0.0)) == pytest.approx(
            expected, rel=1e-9
        )


class TestMarker:
    def test_regular_tetrahedron(self) -> None:
        marker = tetrahedral_marker(20.0, (5.0, 5.0, 5.0))
        edges = [np.linalg.norm(a - b) for a, b in combinations(marker, 2)]
        np.testing.assert_allclose(edges, 20.0)
        np.testing.assert_allclose(marker.mean(axis=0), [5.0, 5.0, 5.0], atol=1e-12)

    def test_edge_must_be_positive(self) -> None:
        with pytest.raises(RegistrationError):
            tetrahedral_marker(0.0)


class TestTracking:
    def test_observation_at_mount_gives_identity(self) -> None:
        mount = RigidTransform.from_rotvec((0.0, 0.3, 0.0), (0.0, 0.0, 40.0))
        prev = TrackedPose(RigidTransform.identity(), 1.0)
        updated = track_update(prev, mount, mount)
        assert updated.pose.allclose(RigidTransform.identity())
        assert updated.timestamp == pytest.approx(1.0 + 1.0 / 30.0)
        assert updated.source is PoseSource.TRACKING_UPDATE

    def test_rigid_marker_follows_the_bone(self, rng: np.random.Generator) -> None:
        mount = RigidTransform.random(rng, 50.0)
        motion = RigidTransform.random(rng)
        updated = track_update(TrackedPose(RigidTransform.identity(), 0.0), motion.compose(mount), mount, 2.5)
        assert updated.pose.allclose(motion, atol=1e-9)
        assert updated.timestamp == 2.5

    def test_noise_free_sequence_matches_the_truth(self, rng: np.random.Generator) -> None:
        mount = RigidTransform.random(rng, 50.0)
        motions = [RigidTransform.random(rng) for _ in range(5)]
        poses = simulate_tracking(TrackedPose(RigidTransform.identity(), 0.0), mount, motions, 0.0, 0.0, rng)
        assert len(poses) == 5
        for pose, motion in zip(poses, motions):
            assert pose.pose.allclose(motion, atol=1e-9)

    def test_noisy_sequence_stays_near_the_truth(self, rng: np.random.Generator) -> None:
        truth = RigidTransform.from_euler_deg((5.0, 0.0, 0.0), (10.0, 0.0, 0.0))
        poses = simulate_tracking(
            TrackedPose(truth, 0.0), RigidTransform.identity(), [truth] * 400, 0.2, 0.2, rng
        )
        angles = np.array([pose.pose.inverse().compose(truth).rotation_angle_deg() for pose in poses])
        # norm of a 3D isotropic gaussian has mean sigma * sqrt(8 / pi)
        assert angles.mean() == pytest.approx(0.2 * np.sqrt(8.0 / np.pi), rel=0.15)
        assert angles.max() < 0.2 * 5.0


class TestProjection:
    def test_invalid_projector(self) -> None:
        with pytest.raises(RegistrationError):
            ProjectorModel(RigidTransform.identity(), focal=(0.0, 1.0))
        with pytest.raises(RegistrationError):
            ProjectorModel(RigidTransform.identity(), image_size=(1.0, -1.0))

    def test_image_coordinates(self) -> None:
        projector = ProjectorModel(RigidTransform.identity(), focal=(2.0, 1.0))
        np.testing.assert_allclose(projector.image_coordinates([(1.0, 2.0, 4.0)]), [[0.5, 0.5, 4.0]])
        assert projector.in_frustum([(0.1, 0.1, 1.0), (0.1, 0.1, -1.0)]).tolist() == [True, False]

    def test_rectangle_outline(self) -> None:
        outline = rectangle_outline(4.0, 2.0, samples_per_edge=8)
        assert outline.shape == (32, 3)
        np.testing.assert_allclose(np.abs(outline[:, :2]).max(axis=0), [2.0, 1.0])
        np.testing.assert_allclose(outline[:, 2], 0.0)
        with pytest.raises(RegistrationError):
            rectangle_outline(0.0, 2.0)

    def test_flat_surface_scales_by_depth_ratio(self, cube: TriangleMesh) -> None:
        projector = ProjectorModel.looking_at((0.0, 0.0, 50.0), (0.0, 0.0, 0.0))
        target = RigidTransform.from_rotvec((0.0, 0.0, 0.0), (0.0, 0.0, 20.0))
        pattern = project_pattern((4.0, 2.0), target, projector, cube)
        assert pattern.coverage == 1.0
        # pattern at depth 30, top face of the cube at depth 40
        np.testing.assert_allclose(pattern.polyline[:, :2], pattern.outline[:, :2] * 40.0 / 30.0, atol=1e-6)
        np.testing.assert_allclose(pattern.polyline[:, 2], 10.0, atol=1e-6)

    def test_tilted_plate_stretches_the_pattern(self) -> None:
        tilt = RigidTransform.from_euler_deg((0.0, 30.0, 0.0))
        plate = box_mesh((-30.0, -30.0, -2.0), (30.0, 30.0, 0.0)).transformed(tilt)
        # a distant projector casts nearly parallel rays
        projector = ProjectorModel.looking_at((0.0, 0.0, 1e5), (0.0, 0.0, 0.0))
        target = RigidTransform.from_rotvec((0.0, 0.0, 0.0), (0.0, 0.0, 20.0))
        pattern = project_pattern((4.0, 2.0), target, projector, plate)
        assert pattern.coverage == 1.0
        along = pattern.polyline @ tilt.apply_vector((1.0, 0.0, 0.0))
        across = pattern.polyline[:, 1]
        assert np.ptp(along) == pytest.approx(4.0 / np.cos(np.radians(30.0)), rel=1e-3)
        assert np.ptp(across) == pytest.approx(2.0, rel=1e-3)
        np.testing.assert_allclose(pattern.polyline @ tilt.apply_vector((0.0, 0.0, 1.0)), 0.0, atol=1e-6)

    def test_missing_bone(self) -> None:
        projector = ProjectorModel.looking_at((0.0, 0.0, 50.0), (0.0, 0.0, 0.0))
        target = RigidTransform.from_rotvec((0.0, 0.0, 0.0), (0.0, 0.0, 20.0))
        with pytest.raises(RegistrationError, match="no bone"):
            project_pattern((4.0, 2.0), target, projector, None)

    def test_pattern_misses_the_bone(self, cube: TriangleMesh) -> None:
        projector = ProjectorModel.looking_at((100.0, 0.0, 50.0), (100.0, 0.0, 0.0))
        target = RigidTransform.from_rotvec((0.0, 0.0, 0.0), (100.0, 0.0, 20.0))
        with pytest.raises(RegistrationError, match="misses"):
            project_pattern((4.0, 2.0), target, projector, cube)

    def test_pattern_outside_the_frustum(self, cube: TriangleMesh) -> None:
        projector = ProjectorModel.looking_at((0.0, 0.0, 50.0), (0.0, 0.0, 0.0), image_size=(0.01, 0.01))
        target = RigidTransform.from_rotvec((0.0, 0.0, 0.0), (0.0, 0.0, 20.0))
        with pytest.raises(RegistrationError, match="frustum"):
            project_pattern((4.0, 2.0), target, projector, cube)


class TestSession:
    def test_report(self) -> None:
        session = SessionDocument(seed=1, targets=[[0.0, 0.0, 50.0], [30.0, 0.0, 0.0]], observation_count=5)
        report = run_session(session)
        assert len(report.tre_at_targets) == 2
        assert len(report.tracking) == 5
        assert [entry.timestamp for entry in report.tracking] == sorted(entry.timestamp for entry in report.tracking)
        assert 0.0 < report.fre < 0.5

    def test_noise_free_session(self) -> None:
        session = SessionDocument(fiducial_noise=0.0, tracking_rotation_noise=0.0, tracking_translation_noise=0.0)
        report = run_session(session)
        assert report.fre < 1e-9
        assert all(entry.translation_mm < 1e-9 for entry in report.tracking)

    def test_same_seed_same_report(self) -> None:
        session = SessionDocument(seed=7, targets=[[10.0, 10.0, 10.0]])
        assert report_bytes(run_session(session)) == report_bytes(run_session(session))

    def test_read_session(self, tmp_path: Path) -> None:
        path = tmp_path / "session.json"
        path.write_bytes(orjson.dumps({"seed": 3, "fiducials": FIDUCIALS.tolist()}))
        session = read_session(path)
        assert session.seed == 3
        assert len(session.fiducials) == 6

    @pytest.mark.parametrize("content", [b"{", b'{"targets": [[1.0, 2.0]]}', b'{"marker_edge": -1}'])
    def test_invalid_session(self, tmp_path: Path, content: bytes) -> None:
        path = tmp_path / "session.json"
        path.write_bytes(content)
        with pytest.raises(SchemaError):
            read_session(path)
