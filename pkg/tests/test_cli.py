from __future__ import annotations

from pathlib import Path

import orjson
import pytest

from osteoplan.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from osteoplan.cli.files import landmarks_bytes
from osteoplan.cli.synthetic import SyntheticSpecimen
from osteoplan.geometry import save_stl
from osteoplan.planning import ResectionPlan, read_plan, write_plan


@pytest.fixture
def inputs(tmp_path: Path, hemipelvis: SyntheticSpecimen) -> dict[str, str]:
    mesh = tmp_path / "bone.stl"
    landmarks = tmp_path / "landmarks.json"
    save_stl(hemipelvis.mesh, mesh)
    landmarks.write_bytes(landmarks_bytes(hemipelvis.landmarks))
    zero = tmp_path / "zero.json"
    zero.write_text("{}", encoding="utf-8")
    return {"mesh": str(mesh), "landmarks": str(landmarks), "zero": str(zero), "logs": str(tmp_path / "logs")}


def run(command: str, *args: str | Path, logs: str) -> int:
    return main([command, *map(str, args), "--log-dir", logs])


def plan_file(inputs: dict[str, str], out: Path) -> Path:
    code = run("plan", "--mesh", inputs["mesh"], "--landmarks", inputs["landmarks"], "--out", out, logs=inputs["logs"])
    assert code == EXIT_OK
    return out / "S01_left_plan.json"


def simulate(inputs: dict[str, str], plan: Path, out: Path, *extra: str) -> int:
    return run(
        "simulate",
        "--plan", plan,
        "--mesh", inputs["mesh"],
        "--landmarks", inputs["landmarks"],
        "--out", out,
        *extra,
        logs=inputs["logs"],
    )  # fmt: skip


class TestPlan:
    def test_four_cuts_at_the_margin(self, inputs: dict[str, str], tmp_path: Path) -> None:
        plan = read_plan(plan_file(inputs, tmp_path / "out"))
        assert len(plan.cuts) == 4
        for cut in plan.cuts:
            assert cut.planned_margin_mp == pytest.approx(5.0, abs=1e-9)

    def test_negative_margin_is_a_usage_error(self, inputs: dict[str, str], tmp_path: Path) -> None:
        code = run(
            "plan", "--mesh", inputs["mesh"], "--landmarks", inputs["landmarks"], "--margin", "-1",
            "--out", tmp_path / "out", logs=inputs["logs"],
        )  # fmt: skip
        assert code == EXIT_USAGE

    def test_unknown_subcommand(self) -> None:
        assert main(["resect"]) == EXIT_USAGE

    def test_missing_mesh_is_an_io_error(self, inputs: dict[str, str], tmp_path: Path) -> None:
        code = run(
            "plan", "--mesh", tmp_path / "missing.stl", "--landmarks", inputs["landmarks"],
            "--out", tmp_path / "out", logs=inputs["logs"],
        )  # fmt: skip
        assert code == EXIT_IO

    def test_bad_landmarks_are_a_validation_error(self, inputs: dict[str, str], tmp_path: Path) -> None:
        bad = tmp_path / "bad.json"
        bad.write_text('{"asis_left": [0, 0]}', encoding="utf-8")
        code = run("plan", "--mesh", inputs["mesh"], "--landmarks", bad, "--out", tmp_path / "out", logs=inputs["logs"])
        assert code == EXIT_VALIDATION

    def test_findings_leave_no_output(self, inputs: dict[str, str], tmp_path: Path) -> None:
        out = tmp_path / "out"
        code = run(
            "plan", "--mesh", inputs["mesh"], "--landmarks", inputs["landmarks"], "--radius", "90",
            "--out", out, logs=inputs["logs"],
        )  # fmt: skip
        assert code == EXIT_VALIDATION
        assert not out.exists()

    def test_findings_can_be_kept(self, inputs: dict[str, str], tmp_path: Path) -> None:
        out = tmp_path / "out"
        code = run(
            "plan", "--mesh", inputs["mesh"], "--landmarks", inputs["landmarks"], "--radius", "90",
            "--allow-findings", "--out", out, logs=inputs["logs"],
        )  # fmt: skip
        assert code == EXIT_OK
        assert (out / "S01_left_plan.json").exists()

    def test_rereading_a_plan_gives_the_same_file(self, inputs: dict[str, str], tmp_path: Path) -> None:
        first = plan_file(inputs, tmp_path / "a").read_bytes()
        second = plan_file(inputs, tmp_path / "b").read_bytes()
        assert first == second


class TestJig:
    def test_staged_jig_and_pattern_pose(
        self, inputs: dict[str, str], tmp_path: Path, four_cut_plan: ResectionPlan
    ) -> None:
        plan = tmp_path / "plan.json"
        write_plan(four_cut_plan, plan)
        out = tmp_path / "out"
        assert run("jig", "--plan", plan, "--out", out, logs=inputs["logs"]) == EXIT_OK
        report = orjson.loads((out / "S01_left_jig.json").read_bytes())
        assert [len(stage["labels"]) for stage in report["stages"]] == [2, 1, 1]
        assert read_plan(out / "S01_left_plan.json").pattern_pose is not None

    def test_three_cut_plan_is_rejected(
        self, inputs: dict[str, str], tmp_path: Path, four_cut_plan: ResectionPlan
    ) -> None:
        plan = tmp_path / "plan.json"
        write_plan(ResectionPlan("S01", "left", four_cut_plan.tumor, four_cut_plan.cuts[:3]), plan)
        out = tmp_path / "out"
        assert run("jig", "--plan", plan, "--out", out, logs=inputs["logs"]) == EXIT_VALIDATION
        assert not out.exists()


class TestRegister:
    def test_session_report(self, inputs: dict[str, str], tmp_path: Path) -> None:
        session = tmp_path / "session.json"
        session.write_bytes(orjson.dumps({"seed": 4, "targets": [[0.0, 0.0, 40.0]], "observation_count": 3}))
        out = tmp_path / "out"
        assert run("register", "--session", session, "--out", out, logs=inputs["logs"]) == EXIT_OK
        report = orjson.loads((out / "registration.json").read_bytes())
        assert report["kind"] == "registration"
        assert len(report["tre_at_targets"]) == 1
        assert len(report["tracking"]) == 3

    def test_invalid_session(self, inputs: dict[str, str], tmp_path: Path) -> None:
        session = tmp_path / "session.json"
        session.write_text('{"marker_edge": 0}', encoding="utf-8")
        assert run("register", "--session", session, "--out", tmp_path / "out", logs=inputs["logs"]) == EXIT_VALIDATION


class TestSimulateEvaluateCompare:
    def test_simulate_needs_a_seed(self, inputs: dict[str, str], tmp_path: Path) -> None:
        plan = plan_file(inputs, tmp_path / "plan")
        assert simulate(inputs, plan, tmp_path / "out") == EXIT_USAGE

    def test_same_seed_same_results(self, inputs: dict[str, str], tmp_path: Path) -> None:
        plan = plan_file(inputs, tmp_path / "plan")
        assert simulate(inputs, plan, tmp_path / "a", "--seed", "7") == EXIT_OK
        assert simulate(inputs, plan, tmp_path / "b", "--seed", "7") == EXIT_OK
        first = (tmp_path / "a" / "results_freehand.json").read_bytes()
        assert first == (tmp_path / "b" / "results_freehand.json").read_bytes()
        trial = orjson.loads(first)["trials"][0]
        assert len(trial["cuts"]) + len(trial["void_labels"]) == 4
        assert (tmp_path / "a" / "fragments" / "S01_left" / "specimen.stl").exists()

    def test_zero_error_pipeline(self, inputs: dict[str, str], tmp_path: Path) -> None:
        plan = plan_file(inputs, tmp_path / "plan")
        sim = tmp_path / "sim"
        code = simulate(inputs, plan, sim, "--seed", "1", "--method", "guided", "--error-model", inputs["zero"])
        assert code == EXIT_OK
        results = sim / "results_guided.json"

        report = tmp_path / "report"
        assert run("evaluate", results, "--heatmaps", "--out", report, logs=inputs["logs"]) == EXIT_OK
        for name in ("metrics.csv", "summary.json", "margin_table.csv", "chart.csv", "chart_counts.csv"):
            assert (report / name).exists()
        assert list((report / "heatmaps").glob("S01_left_*.ply"))
        summary = orjson.loads((report / "summary.json").read_bytes())
        (block,) = summary["methods"]
        # the registration estimate still moves guided cuts a little
        assert block["dd"]["n"] == 4
        assert block["dd"]["mean"] < 1.0

        compared = tmp_path / "compared"
        code = run("compare", "--a", results, "--b", results, "--out", compared, logs=inputs["logs"])
        assert code == EXIT_OK
        summary = orjson.loads((compared / "summary.json").read_bytes())
        assert [block["method"] for block in summary["methods"]] == ["guided", "guided-b"]
        for test in summary["tests"].values():
            assert test["p_value"] == pytest.approx(1.0)

    def test_evaluate_rejects_other_documents(self, inputs: dict[str, str], tmp_path: Path) -> None:
        session = tmp_path / "registration.json"
        session.write_text('{"kind": "registration"}', encoding="utf-8")
        assert run("evaluate", session, "--out", tmp_path / "out", logs=inputs["logs"]) == EXIT_VALIDATION

    def test_manifest_entries_need_meshes(self, inputs: dict[str, str], tmp_path: Path) -> None:
        plan = plan_file(inputs, tmp_path / "plan")
        manifest = tmp_path / "manifest.json"
        manifest.write_bytes(orjson.dumps({"entries": [{"plan": str(plan)}]}))
        code = run("simulate", "--manifest", manifest, "--seed", "1", "--out", tmp_path / "out", logs=inputs["logs"])
        assert code == EXIT_VALIDATION


@pytest.mark.slow
class TestDemo:
    def test_same_seed_same_study(self, tmp_path: Path) -> None:
        logs = str(tmp_path / "logs")
        for name in ("a", "b"):
            assert run("demo", "--seed", "42", "--specimens", "2", "--out", tmp_path / name, logs=logs) == EXIT_OK
        for name in ("summary.json", "results_guided.json", "results_freehand.json", "metrics.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        summary = orjson.loads((tmp_path / "a" / "summary.json").read_bytes())
        assert {block["method"] for block in summary["methods"]} == {"guided", "freehand"}
        assert set(summary["tests"]) == {"dd", "rd", "pd", "md"}
        assert summary["thresholds_mm"] == [1.0, 3.0, 5.0]
