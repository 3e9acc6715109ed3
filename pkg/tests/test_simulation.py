from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from osteoplan.cli.synthetic import box_mesh
from osteoplan.config import Settings
from osteoplan.core import PlanError, SchemaError, VoidCutError
from osteoplan.evaluation import deviations, evaluate_trial
from osteoplan.geometry import PelvicFrame, Plane, RigidTransform, TriangleMesh
from osteoplan.planning import (
    CutLabel,
    PlannedCut,
    ResectionPlan,
    Side,
    generate_margin_planes,
    make_tumor,
    planned_margin,
)
from osteoplan.simulation import (
    ZERO_ERROR,
    ErrorModel,
    ExecutionError,
    MethodEnum,
    TrialInput,
    achieved_plane,
    allocate_methods,
    execute_cut,
    load_error_model,
    magnitude_gamma_parameters,
    read_results,
    record_planned_cut,
    results_bytes,
    results_document,
    run_batch,
    run_trial,
    sample_execution_error,
    sample_execution_errors,
    sample_face_points,
    trial_rng,
    trial_seed,
    trial_to_record,
    truncated_gamma_moments,
    zero_error_model,
)

KERF = 1.27
FRAME = PelvicFrame(RigidTransform.identity())
LABELS = [CutLabel.SUPRA_ACETABULAR, CutLabel.INFRA_ACETABULAR, CutLabel.SUPERIOR_PUBIC_RAMUS]
NORMALS = [(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 0.0, 1.0)]
NOISY = ErrorModel.model_validate(
    {"dt": {"mean": 1.0, "sd": 1.0}, "roll": {"mean": 2.0, "sd": 2.0}, "pitch": {"mean": 1.0, "sd": 1.0}}
)


@pytest.fixture(scope="module")
def bone() -> TriangleMesh:
    return box_mesh((-50.0, -50.0, -50.0), (50.0, 50.0, 50.0), divisions=4)


def box_plan(specimen_id: str = "S01", side: Side = Side.LEFT, radius: float = 10.0) -> ResectionPlan:
    """Three planes 15 mm from a tumor at the box centre."""
    tumor = make_tumor(radius, 5.0, hip_center=(0.0, 0.0, 0.0))
    return ResectionPlan(specimen_id, side, tumor, tuple(generate_margin_planes(tumor, NORMALS, LABELS)))


class TestErrorModel:
    def test_zero_model_draws_zeros(self, rng: np.random.Generator) -> None:
        assert sample_execution_error(zero_error_model(), rng) == ZERO_ERROR

    def test_same_seed_same_draw(self) -> None:
        first = sample_execution_error(NOISY, np.random.default_rng(11))
        second = sample_execution_error(NOISY, np.random.default_rng(11))
        assert first == second

    @pytest.mark.parametrize("method", [MethodEnum.FREEHAND, MethodEnum.GUIDED])
    def test_preset_magnitudes_match_their_moments(self, settings: Settings, method: MethodEnum) -> None:
        model = settings.preset(method)
        draws = np.abs(sample_execution_errors(model, np.random.default_rng(2024), 100_000))
        for column, spec in enumerate((model.dt, model.roll, model.pitch)):
            assert draws[:, column].mean() == pytest.approx(spec.mean, rel=0.03)
            assert draws[:, column].std() == pytest.approx(spec.sd, rel=0.03)
            if spec.trunc is not None:
                assert draws[:, column].max() <= spec.trunc

    def test_magnitude_gamma_signs_are_balanced(self, settings: Settings) -> None:
        draws = sample_execution_errors(settings.preset(MethodEnum.FREEHAND), np.random.default_rng(8), 50_000)
        assert np.mean(draws > 0.0) == pytest.approx(0.5, abs=0.01)

    @pytest.mark.parametrize(("mean", "sd", "bound"), [(2.07, 1.71, None), (15.36, 17.57, 90.0), (1.01, 0.78, 3.0)])
    def test_gamma_parameters_reproduce_the_moments(self, mean: float, sd: float, bound: float | None) -> None:
        shape, scale = magnitude_gamma_parameters(mean, sd, bound)
        assert truncated_gamma_moments(shape, scale, bound) == pytest.approx((mean, sd), rel=1e-6)

    def test_guided_translation_stays_within_tolerance(self, settings: Settings) -> None:
        draws = sample_execution_errors(settings.preset(MethodEnum.GUIDED), np.random.default_rng(5), 20_000)
        assert np.mean(np.abs(draws[:, 0]) < 3.0) >= 0.99

    def test_trial_seed(self) -> None:
        same = trial_seed(1, "S01", "left").generate_state(4)
        np.testing.assert_array_equal(same, trial_seed(1, "S01", "left").generate_state(4))
        assert not np.array_equal(same, trial_seed(1, "S01", "right").generate_state(4))
        assert not np.array_equal(same, trial_seed(1, "S01", "left", stream=1).generate_state(4))

    def test_load_error_model(self, tmp_path: Path) -> None:
        path = tmp_path / "model.json"
        path.write_text('{"family": "gaussian", "dt": {"mean": 0.5, "sd": 0.2}}', encoding="utf-8")
        assert load_error_model(path).dt.sd == 0.2

    @pytest.mark.parametrize(
        "content",
        [
            "{",
            '{"dt": {"sd": -1.0}}',
            '{"family": "truncated-gaussian", "dt": {"mean": 5.0, "sd": 1.0, "trunc": 3.0}}',
            '{"family": "uniform"}',
            '{"family": "magnitude-gamma", "roll": {"mean": -1.0, "sd": 1.0}}',
            '{"family": "magnitude-gamma", "roll": {"mean": 10.0, "sd": 20.0, "trunc": 30.0}}',
        ],
    )
    def test_invalid_error_model(self, tmp_path: Path, content: str) -> None:
        path = tmp_path / "model.json"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(SchemaError):
            load_error_model(path)


class TestAchievedPlane:
    def test_zero_error_reproduces_the_plan(self, bone: TriangleMesh) -> None:
        for cut in box_plan().cuts:
            plane = achieved_plane(cut, ZERO_ERROR, FRAME, bone)
            np.testing.assert_allclose(plane.normal, cut.plane.normal, atol=1e-12)
            assert plane.offset == pytest.approx(cut.plane.offset, abs=1e-9)

    def test_translation_moves_the_offset(self, bone: TriangleMesh) -> None:
        cut = box_plan().cuts[0]
        plane = achieved_plane(cut, ExecutionError(2.0, 0.0, 0.0), FRAME, bone)
        np.testing.assert_allclose(plane.normal, cut.plane.normal, atol=1e-12)
        assert plane.offset == pytest.approx(cut.plane.offset + 2.0)

    def test_single_axis_tilt(self, bone: TriangleMesh) -> None:
        cut = box_plan().cuts[2]
        plane = achieved_plane(cut, ExecutionError(0.0, 5.0, 0.0), FRAME, bone)
        np.testing.assert_allclose(plane.normal, [0.0, -np.sin(np.radians(5.0)), np.cos(np.radians(5.0))], atol=1e-12)

    def test_combined_tilt_through_the_section_centroid(self, bone: TriangleMesh) -> None:
        cut = box_plan().cuts[2]
        plane = achieved_plane(cut, ExecutionError(0.0, 5.0, 3.0), FRAME, bone)
        roll, pitch = np.radians(5.0), np.radians(3.0)
        expected = np.array([np.cos(roll) * np.sin(pitch), -np.sin(roll) * np.cos(pitch), np.cos(roll) * np.cos(pitch)])
        np.testing.assert_allclose(plane.normal, expected / np.linalg.norm(expected), atol=1e-12)
        # the z = 15 section of the box is centred on the axis
        assert plane.signed_distance((0.0, 0.0, 15.0)) == pytest.approx(0.0, abs=1e-9)

    def test_combined_tilt_is_measured_back_exactly(self, bone: TriangleMesh) -> None:
        plan = box_plan()
        cut = plan.cuts[2]
        plane = achieved_plane(cut, ExecutionError(0.0, 5.0, 3.0), FRAME, bone, tumor=plan.tumor)
        deviation = deviations(cut, plane, plan.tumor, FRAME)
        assert deviation.roll_deviation == pytest.approx(5.0, abs=1e-9)
        assert deviation.pitch_deviation == pytest.approx(3.0, abs=1e-9)
        assert deviation.signed_deviation == pytest.approx(0.0, abs=1e-9)

    def test_translation_moves_the_tumor_margin(self, bone: TriangleMesh) -> None:
        plan = box_plan()
        cut = plan.cuts[2]
        plane = achieved_plane(cut, ExecutionError(-1.5, 12.0, -7.0), FRAME, bone, tumor=plan.tumor)
        assert planned_margin(plane, plan.tumor) == pytest.approx(cut.planned_margin_mp - 1.5, abs=1e-9)

    def test_random_planes_round_trip(self, bone: TriangleMesh) -> None:
        rng = np.random.default_rng(31)
        tumor = make_tumor(10.0, 5.0, hip_center=(0.0, 0.0, 0.0))
        for _ in range(1000):
            frame = PelvicFrame(RigidTransform.random(rng, translation_scale=0.0))
            local = rng.normal(size=3)
            local[2] = np.copysign(max(abs(local[2]), 0.5 * np.linalg.norm(local[:2])), local[2])
            normal = frame.vector_to_world(local / np.linalg.norm(local))
            cut = PlannedCut.from_plane(Plane(normal, 15.0), CutLabel.SUPRA_ACETABULAR, tumor)
            error = ExecutionError(rng.uniform(-5.0, 5.0), rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0))
            plane = achieved_plane(cut, error, frame, bone, tumor=tumor)
            deviation = deviations(cut, plane, tumor, frame)
            assert deviation.roll_deviation == pytest.approx(abs(error.droll), abs=1e-6)
            assert deviation.pitch_deviation == pytest.approx(abs(error.dpitch), abs=1e-6)
            assert deviation.signed_deviation == pytest.approx(error.dt, abs=1e-6)

    def test_guide_error_moves_the_target(self, bone: TriangleMesh) -> None:
        cut = box_plan().cuts[0]
        shift = RigidTransform.from_rotvec((0.0, 0.0, 0.0), (1.5, 0.0, 0.0))
        plane = achieved_plane(cut, ZERO_ERROR, FRAME, bone, guide_error=shift)
        assert plane.offset == pytest.approx(cut.plane.offset + 1.5)

    def test_plane_outside_the_bone(self, bone: TriangleMesh) -> None:
        cut = box_plan(radius=60.0).cuts[0]
        with pytest.raises(VoidCutError):
            achieved_plane(cut, ZERO_ERROR, FRAME, bone)


class TestExecuteCut:
    def test_host_piece_beyond_the_kerf(self, bone: TriangleMesh) -> None:
        result = execute_cut(box_plan().cuts[0], ZERO_ERROR, FRAME, bone, KERF)
        np.testing.assert_allclose(result.cut_face_points[:, 0], 15.0 + KERF / 2.0, atol=1e-9)
        assert result.host.is_watertight
        assert result.host.volume == pytest.approx(100.0 * 100.0 * (35.0 - KERF / 2.0), rel=1e-9)
        assert result.remainder.vertices[:, 0].max() == pytest.approx(15.0 - KERF / 2.0)

    def test_perturbed_plane_missing_the_bone(self, bone: TriangleMesh) -> None:
        with pytest.raises(VoidCutError):
            execute_cut(box_plan().cuts[0], ExecutionError(40.0, 0.0, 0.0), FRAME, bone, KERF)


class TestRunTrial:
    def test_cuts_run_in_plan_order(self, bone: TriangleMesh, rng: np.random.Generator) -> None:
        trial = run_trial(box_plan(), zero_error_model(), bone, KERF, FRAME, rng)
        assert trial.complete
        assert [cut.label for cut in trial.cuts] == [label.value for label in LABELS]
        assert [label for label, _ in trial.host_fragments] == [label.value for label in LABELS]
        bounds = trial.specimen.bounds
        np.testing.assert_allclose(bounds[0][[0, 2]], [-15.0 + KERF / 2.0, -50.0], atol=1e-9)
        np.testing.assert_allclose(bounds[1][[0, 2]], [15.0 - KERF / 2.0, 15.0 - KERF / 2.0], atol=1e-9)

    def test_same_stream_same_trial(self, bone: TriangleMesh) -> None:
        first = run_trial(box_plan(), NOISY, bone, KERF, FRAME, np.random.default_rng(3))
        second = run_trial(box_plan(), NOISY, bone, KERF, FRAME, np.random.default_rng(3))
        for a, b in zip(first.cuts, second.cuts):
            assert a.error == b.error
            np.testing.assert_array_equal(a.achieved_plane.normal, b.achieved_plane.normal)

    def test_void_cut_is_recorded(self, bone: TriangleMesh, rng: np.random.Generator) -> None:
        tumor = make_tumor(10.0, 5.0, hip_center=(0.0, 0.0, 0.0))
        cuts = generate_margin_planes(tumor, [(1.0, 0.0, 0.0), (0.0, 0.0, 1.0)], LABELS[:2])
        void = PlannedCut.from_plane(Plane((0.0, 1.0, 0.0), 100.0), LABELS[2], tumor)
        plan = ResectionPlan("S01", Side.LEFT, tumor, (*cuts, void))
        trial = run_trial(plan, zero_error_model(), bone, KERF, FRAME, rng)
        assert not trial.complete
        assert trial.void_labels == (LABELS[2].value,)
        assert [finding.code for finding in trial.findings] == ["void-cut"]
        assert len(trial.cuts) == 2

    @pytest.mark.slow
    @pytest.mark.parametrize("method", [MethodEnum.FREEHAND, MethodEnum.GUIDED])
    def test_measured_deviations_reproduce_the_preset(
        self, bone: TriangleMesh, settings: Settings, method: MethodEnum
    ) -> None:
        model = settings.preset(method)
        tumor = make_tumor(5.0, 20.0, hip_center=(0.0, 0.0, 0.0))
        plan = ResectionPlan("S01", Side.LEFT, tumor, tuple(generate_margin_planes(tumor, [NORMALS[2]], LABELS[2:])))
        measured, injected = [], []
        for seed in range(10_000):
            trial = run_trial(plan, model, bone, KERF, FRAME, trial_rng(seed, "S01", "left"), method, seed)
            row = evaluate_trial(trial_to_record(trial)).deviations[0]
            measured.append((row.distance_deviation, row.roll_deviation, row.pitch_deviation))
            injected.append(trial.cuts[0].error)
        values = np.array(measured, dtype=float)
        np.testing.assert_allclose(values, np.abs(np.array(injected)), atol=1e-6)
        for column, spec in enumerate((model.dt, model.roll, model.pitch)):
            assert values[:, column].mean() == pytest.approx(spec.mean, rel=0.05)
            assert values[:, column].std() == pytest.approx(spec.sd, rel=0.05)


class TestRunBatch:
    def test_result_does_not_depend_on_input_order(self, bone: TriangleMesh) -> None:
        inputs = [TrialInput(box_plan("S01"), bone, FRAME), TrialInput(box_plan("S02", Side.RIGHT), bone, FRAME)]
        forward = run_batch(inputs, NOISY, [7, 7], KERF)
        backward = run_batch(inputs[::-1], NOISY, [7, 7], KERF)
        assert list(forward) == [("S01", "left"), ("S02", "right")]
        for key, trial in forward.items():
            assert [cut.error for cut in trial.cuts] == [cut.error for cut in backward[key].cuts]

    def test_seed_count_must_match(self, bone: TriangleMesh) -> None:
        with pytest.raises(PlanError):
            run_batch([TrialInput(box_plan(), bone, FRAME)], NOISY, [1, 2], KERF)

    def test_duplicate_keys(self, bone: TriangleMesh) -> None:
        inputs = [TrialInput(box_plan(), bone, FRAME), TrialInput(box_plan(), bone, FRAME)]
        with pytest.raises(PlanError, match="duplicate"):
            run_batch(inputs, NOISY, [1, 1], KERF)


class TestAllocation:
    def test_one_of_each_per_specimen(self) -> None:
        allocation = allocate_methods(["S02", "S01", "S03"], seed=4)
        assert len(allocation) == 6
        for specimen_id in ("S01", "S02", "S03"):
            methods = {allocation[(specimen_id, "left")], allocation[(specimen_id, "right")]}
            assert methods == {MethodEnum.FREEHAND, MethodEnum.GUIDED}

    def test_allocation_is_seeded(self) -> None:
        ids = [f"S{i:02d}" for i in range(1, 11)]
        assert allocate_methods(ids, 9) == allocate_methods(ids, 9)


class TestFacePoints:
    def test_zero_count_returns_the_face(self, rng: np.random.Generator) -> None:
        face = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        np.testing.assert_array_equal(sample_face_points(face, 0, 0.1, rng), face)

    def test_samples_stay_on_the_face(self, rng: np.random.Generator) -> None:
        face = np.array([[0.0, 0.0, 1.0], [4.0, 0.0, 1.0], [0.0, 4.0, 1.0], [4.0, 4.0, 1.0]])
        samples = sample_face_points(face, 50, 0.0, rng)
        assert samples.shape == (50, 3)
        np.testing.assert_allclose(samples[:, 2], 1.0)
        assert (samples[:, :2] >= 0.0).all()
        assert (samples[:, :2] <= 4.0).all()


class TestResultsFile:
    def test_written_results_read_back(self, bone: TriangleMesh, tmp_path: Path) -> None:
        trials = run_batch([TrialInput(box_plan(), bone, FRAME)], NOISY, [3], KERF)
        document = results_document(trials.values(), MethodEnum.FREEHAND, KERF, NOISY)
        path = tmp_path / "results.json"
        path.write_bytes(results_bytes(document))
        loaded = read_results(path)
        assert loaded.method is MethodEnum.FREEHAND
        record = loaded.trials[0]
        assert (record.specimen_id, record.side, record.seed) == ("S01", "left", 3)
        planned = record_planned_cut(record.cuts[0])
        np.testing.assert_allclose(planned.plane.normal, [1.0, 0.0, 0.0], atol=1e-12)
        assert planned.planned_margin_mp == pytest.approx(5.0)
        assert record.cuts[0].dt_mm == trials[("S01", "left")].cuts[0].error.dt

    def test_wrong_document_kind(self, tmp_path: Path) -> None:
        path = tmp_path / "results.json"
        path.write_text(
            '{"kind": "registration", "method": "guided", "kerf_mm": 1.27, "error_model": {}, "trials": []}',
            encoding="utf-8",
        )
        with pytest.raises(SchemaError):
            read_results(path)
