"""One workflow per subcommand.

Each workflow reads and validates its inputs in prepare, computes in run and
stages its files in postprocess; BaseWorkflow commits the staged files only
when all three steps succeeded.
"""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy.typing as npt

from ..config import Settings, load_settings
from ..core import BaseWorkflow, Finding, PlanError, SchemaError, VoidCutError
from ..evaluation import (
    SpecimenReport,
    chart_bytes,
    compare_methods,
    deviation_chart,
    evaluate_results,
    extract_resected_plane,
    heatmap_field,
    margin_table,
    margin_table_bytes,
    metric_values,
    metrics_csv_bytes,
    summarize_method,
    summary_bytes,
    summary_document,
)
from ..geometry import (
    LandmarkSet,
    PelvicFrame,
    RigidTransform,
    TriangleMesh,
    build_pelvic_frame,
    load_mesh,
    ply_bytes,
    stl_bytes,
)
from ..jig import JigStage, load_catalog, pattern_pose, resection_sequence
from ..planning import (
    ResectionPlan,
    Side,
    default_cut_normals,
    generate_margin_planes,
    make_tumor,
    plan_bytes,
    read_plan,
    validate_plan,
)
from ..registration import (
    ProjectionDocument,
    ProjectorModel,
    RegistrationReportDocument,
    project_pattern,
    read_session,
    report_bytes,
    run_session,
    simulate_registration,
    tetrahedral_marker,
)
from ..simulation import (
    BatchManifest,
    ErrorModel,
    MethodEnum,
    TrialInput,
    TrialResult,
    TrialResultsDocument,
    load_error_model,
    read_results,
    record_planned_cut,
    results_bytes,
    results_document,
    run_batch,
    trial_rng,
)
from .files import jig_report, json_bytes, read_landmarks

if TYPE_CHECKING:
    from ..evaluation import Comparison, MarginTable, SummaryDocument

PROJECTOR_DISTANCE_MM = 300.0
# marker sits this far beyond the first cut's margin sphere
MARKER_STANDOFF_MM = 15.0


def _settings(args: argparse.Namespace) -> Settings:
    return load_settings(getattr(args, "config", None))


# ---------------------------------------------------------------- shared steps


def build_plan(
    specimen_id: str,
    side: Side | str,
    bone: TriangleMesh,
    landmarks: LandmarkSet,
    settings: Settings,
    radius: float | None = None,
    margin: float | None = None,
    hip_center: npt.ArrayLike | None = None,
) -> tuple[ResectionPlan, PelvicFrame, list[Finding]]:
    """Frame, tumor sphere at the hip center and the four margin planes, validated against the bone."""
    frame = build_pelvic_frame(landmarks, settings.frame.y_axis)
    center = hip_center if hip_center is not None else landmarks.hip_center
    if center is None:
        raise PlanError("no hip center: pass --hip-center or add hip_center to the landmark file")
    tumor = make_tumor(
        settings.planning.tumor_radius if radius is None else radius,
        settings.planning.safety_margin if margin is None else margin,
        hip_center=center,
    )
    normals, labels = default_cut_normals(frame, settings.planning.cut_normals, side)
    plan = ResectionPlan(specimen_id, Side(side), tumor, tuple(generate_margin_planes(tumor, normals, labels)))
    return plan, frame, validate_plan(plan, bone)


def guide_error(plan: ResectionPlan, settings: Settings, seed: int) -> RigidTransform:
    """Navigation error of a guided trial: the registration estimate against the truth, T_est^-1 o T_true."""
    cut = plan.cuts[0]
    standoff = plan.tumor.radius + plan.tumor.safety_margin + MARKER_STANDOFF_MM
    marker = tetrahedral_marker(settings.registration.marker_edge, plan.tumor.center + standoff * cut.plane.normal)
    truth = RigidTransform.identity()
    rng = trial_rng(seed, plan.specimen_id, plan.side.value, stream=1)
    simulated = simulate_registration(marker, truth, settings.registration.fiducial_noise, rng)
    return simulated.result.transform.inverse().compose(truth)


def error_model_for(method: MethodEnum, settings: Settings, path: str | None = None) -> ErrorModel:
    return load_error_model(path) if path else settings.preset(method)


def fragment_name(specimen_id: str, side: str, index: int, label: str) -> Path:
    """Host fragment of the index-th executed cut, relative to the fragments folder."""
    return Path(f"{specimen_id}_{side}") / f"host-{index}-{label}.stl"


def trial_fragments(trial: TrialResult) -> dict[Path, TriangleMesh]:
    specimen_id, side = trial.key
    return {
        fragment_name(specimen_id, side, index, label): mesh
        for index, (label, mesh) in enumerate(trial.host_fragments, start=1)
    }


def stage_fragments(workflow: BaseWorkflow, trial: TrialResult) -> None:  # type: ignore[type-arg]
    for name, mesh in trial_fragments(trial).items():
        workflow.stager.stage(Path("fragments") / name, stl_bytes(mesh))
    if not trial.specimen.is_empty:
        specimen_id, side = trial.key
        workflow.stager.stage(Path("fragments") / f"{specimen_id}_{side}" / "specimen.stl", stl_bytes(trial.specimen))


def heatmap_files(
    document: TrialResultsDocument, fragment: Callable[[Path], TriangleMesh | None]
) -> dict[Path, bytes]:
    """PLY heatmap per executed plane whose host fragment the lookup can supply."""
    files: dict[Path, bytes] = {}
    for record in document.trials:
        for index, cut in enumerate(record.cuts, start=1):
            mesh = fragment(fragment_name(record.specimen_id, record.side, index, cut.label))
            if mesh is None:
                continue
            planned = record_planned_cut(cut)
            resected = extract_resected_plane(cut.cut_face_points, planned.plane, cut.kerf_mm)
            field_mesh = heatmap_field(mesh, planned.plane, resected)
            files[Path("heatmaps") / f"{record.specimen_id}_{record.side}_{cut.label}.ply"] = ply_bytes(field_mesh)
    return files


def fragments_on_disk(folder: Path) -> Callable[[Path], TriangleMesh | None]:
    def lookup(name: Path) -> TriangleMesh | None:
        path = folder / name
        return load_mesh(path) if path.exists() else None

    return lookup


def report_findings(reports: Sequence[SpecimenReport]) -> list[str]:
    return sorted({f"{r.specimen_id}/{r.side} {finding}" for r in reports for finding in r.findings})


def stage_evaluation(
    workflow: BaseWorkflow,  # type: ignore[type-arg]
    reports: Sequence[SpecimenReport],
    settings: Settings,
    comparison: Comparison | None = None,
) -> SummaryDocument:
    """Stage metrics.csv, summary.json, margin_table.csv and the deviation chart."""
    evaluation = settings.evaluation
    grouped: dict[str, list[SpecimenReport]] = {}
    for report in reports:
        grouped.setdefault(report.method.value, []).append(report)

    margins: MarginTable | None = None
    if comparison is not None:
        margins = comparison.margins
    else:
        values = {method: metric_values(group, "distance_deviation") for method, group in sorted(grouped.items())}
        if any(values.values()):
            margins = margin_table({k: v for k, v in values.items() if v}, evaluation.thresholds)
    summaries = [summarize_method(group, method) for method, group in sorted(grouped.items())]
    document = summary_document(summaries, comparison, margins, report_findings(reports))

    chart, counts = deviation_chart(reports, evaluation.tolerance, evaluation.involvement)
    workflow.stager.stage("metrics.csv", metrics_csv_bytes(reports))
    workflow.stager.stage("summary.json", summary_bytes(document))
    if margins is not None:
        workflow.stager.stage("margin_table.csv", margin_table_bytes(margins))
    workflow.stager.stage("chart.csv", chart_bytes(chart))
    workflow.stager.stage("chart_counts.csv", chart_bytes(counts))
    return document


# ------------------------------------------------------------------ workflows


@dataclass
class PlanInputs:
    settings: Settings
    bone: TriangleMesh
    landmarks: LandmarkSet
    specimen_id: str
    side: Side
    radius: float | None
    margin: float | None
    hip_center: list[float] | None
    allow_findings: bool


@dataclass
class PlanOutcome:
    plan: ResectionPlan
    findings: list[Finding]
    allow_findings: bool


class PlanWorkflow(BaseWorkflow[argparse.Namespace, PlanInputs, PlanOutcome, ResectionPlan]):
    def prepare(self, args: argparse.Namespace) -> PlanInputs:
        return PlanInputs(
            settings=_settings(args),
            bone=load_mesh(args.mesh),
            landmarks=read_landmarks(args.landmarks),
            specimen_id=args.specimen,
            side=Side(args.side),
            radius=args.radius,
            margin=args.margin,
            hip_center=args.hip_center,
            allow_findings=args.allow_findings,
        )

    def run(self, inputs: PlanInputs) -> PlanOutcome:
        plan, _, findings = build_plan(
            inputs.specimen_id,
            inputs.side,
            inputs.bone,
            inputs.landmarks,
            inputs.settings,
            inputs.radius,
            inputs.margin,
            inputs.hip_center,
        )
        return PlanOutcome(plan, findings, inputs.allow_findings)

    def postprocess(self, outcome: PlanOutcome) -> ResectionPlan:
        plan = outcome.plan
        for cut in plan.cuts:
            print(f"{cut.label.value}: Mp = {cut.planned_margin_mp:.3f} mm")
        for finding in outcome.findings:
            print(f"finding {finding}")
        if outcome.findings and not outcome.allow_findings:
            raise PlanError(f"plan has {len(outcome.findings)} validation finding(s); pass --allow-findings to keep it")
        self.stager.stage(f"{plan.specimen_id}_{plan.side.value}_plan.json", plan_bytes(plan))
        return plan


@dataclass
class JigInputs:
    settings: Settings
    plan: ResectionPlan
    bone: TriangleMesh | None
    catalog_path: str | None


class JigWorkflow(BaseWorkflow[argparse.Namespace, JigInputs, list[JigStage], list[JigStage]]):
    def prepare(self, args: argparse.Namespace) -> JigInputs:
        settings = _settings(args)
        path = args.catalog or settings.catalog_path()
        return JigInputs(
            settings=settings,
            plan=read_plan(args.plan),
            bone=load_mesh(args.mesh) if args.mesh else None,
            catalog_path=str(path) if path else None,
        )

    def run(self, inputs: JigInputs) -> list[JigStage]:
        self._plan = inputs.plan
        return resection_sequence(
            inputs.plan,
            load_catalog(inputs.catalog_path),
            inputs.bone,
            inputs.settings.jig.angle_weight,
            inputs.settings.jig.feasibility_limit,
        )

    def postprocess(self, stages: list[JigStage]) -> list[JigStage]:
        plan = self._plan.with_pattern_pose(pattern_pose(stages[0].placement, stages[0].assembly))
        stem = f"{plan.specimen_id}_{plan.side.value}"
        self.stager.stage(f"{stem}_jig.json", json_bytes(jig_report(stages)))
        self.stager.stage(f"{stem}_plan.json", plan_bytes(plan))
        for stage in stages:
            print(f"step {stage.step}: {', '.join(stage.config.components)} -> {', '.join(stage.labels)}")
        return stages


class RegisterWorkflow(
    BaseWorkflow[argparse.Namespace, argparse.Namespace, RegistrationReportDocument, RegistrationReportDocument]
):
    def prepare(self, args: argparse.Namespace) -> argparse.Namespace:
        args.session_document = read_session(args.session)
        if args.seed is not None:
            args.session_document = args.session_document.model_copy(update={"seed": args.seed})
        args.plan_document = read_plan(args.plan) if args.plan else None
        args.bone = load_mesh(args.mesh) if args.mesh else None
        return args

    def run(self, args: argparse.Namespace) -> RegistrationReportDocument:
        report = run_session(args.session_document)
        plan: ResectionPlan | None = args.plan_document
        if plan is not None and plan.pattern_pose is not None and args.bone is not None:
            catalog = load_catalog(_settings(args).catalog_path())
            size = (catalog.base.pattern.width, catalog.base.pattern.height)
            origin = plan.pattern_pose.translation
            up = plan.pattern_pose.rotation[:, 2]
            projector = ProjectorModel.looking_at(
                origin + PROJECTOR_DISTANCE_MM * up, origin, up=plan.pattern_pose.rotation[:, 1], image_size=(0.5, 0.5)
            )
            projected = project_pattern(size, plan.pattern_pose, projector, args.bone)
            report = report.model_copy(
                update={
                    "projection": ProjectionDocument(
                        samples=len(projected.outline),
                        hits=int(projected.hit.sum()),
                        coverage=projected.coverage,
                        polyline=[[float(v) for v in point] for point in projected.polyline],
                    )
                }
            )
        return report

    def postprocess(self, report: RegistrationReportDocument) -> RegistrationReportDocument:
        self.stager.stage("registration.json", report_bytes(report))
        print(f"FRE {report.fre:.4f} mm")
        return report


@dataclass
class SimulateInputs:
    settings: Settings
    method: MethodEnum
    model: ErrorModel
    trials: list[TrialInput]
    seeds: list[int]
    strict: bool


class SimulateWorkflow(
    BaseWorkflow[argparse.Namespace, SimulateInputs, dict[tuple[str, str], TrialResult], TrialResultsDocument]
):
    def prepare(self, args: argparse.Namespace) -> SimulateInputs:
        settings = _settings(args)
        method = MethodEnum(args.method)
        if args.manifest:
            manifest_path = Path(args.manifest)
            try:
                manifest = BatchManifest.model_validate_json(manifest_path.read_bytes())
            except ValueError as exc:
                raise SchemaError(f"invalid batch manifest {manifest_path}: {exc}") from exc
            base = manifest_path.parent
            entries = [
                (base / e.plan, base / (e.mesh or ""), base / (e.landmarks or ""), e.seed) for e in manifest.entries
            ]
            if any(e.mesh is None or e.landmarks is None for e in manifest.entries):
                raise SchemaError("every manifest entry needs a mesh and a landmark file")
        else:
            if not (args.plan and args.mesh and args.landmarks):
                raise SchemaError("simulate needs --manifest or all of --plan, --mesh and --landmarks")
            entries = [(Path(args.plan), Path(args.mesh), Path(args.landmarks), None)]

        trials: list[TrialInput] = []
        seeds: list[int] = []
        propagate = method is MethodEnum.GUIDED and settings.registration.propagate_to_guided
        for plan_path, mesh_path, landmark_path, entry_seed in entries:
            plan = read_plan(plan_path)
            seed = args.seed if entry_seed is None else entry_seed
            frame = build_pelvic_frame(read_landmarks(landmark_path), settings.frame.y_axis)
            error = guide_error(plan, settings, seed) if propagate else None
            trials.append(TrialInput(plan, load_mesh(mesh_path), frame, method, error))
            seeds.append(seed)
        return SimulateInputs(
            settings, method, error_model_for(method, settings, args.error_model), trials, seeds, args.strict
        )

    def run(self, inputs: SimulateInputs) -> dict[tuple[str, str], TrialResult]:
        self._inputs = inputs
        return run_batch(inputs.trials, inputs.model, inputs.seeds, inputs.settings.simulation.kerf)

    def postprocess(self, results: dict[tuple[str, str], TrialResult]) -> TrialResultsDocument:
        inputs = self._inputs
        void = [
            f"{key[0]}/{key[1]}: {', '.join(trial.void_labels)}" for key, trial in results.items() if trial.void_labels
        ]
        for line in void:
            print(f"void cut {line}")
        if void and inputs.strict:
            raise VoidCutError(f"{len(void)} trial(s) with void cuts")
        document = results_document(results.values(), inputs.method, inputs.settings.simulation.kerf, inputs.model)
        self.stager.stage(f"results_{inputs.method.value}.json", results_bytes(document))
        for trial in results.values():
            stage_fragments(self, trial)
        print(f"{sum(len(t.cuts) for t in results.values())} planes simulated ({inputs.method.value})")
        return document


@dataclass
class EvaluateInputs:
    settings: Settings
    documents: list[tuple[Path, TrialResultsDocument]]
    heatmaps: bool
    fragments: Path | None


def _evaluate_inputs(args: argparse.Namespace, paths: Sequence[str]) -> EvaluateInputs:
    documents = [(Path(path), read_results(path)) for path in paths]
    versions = {document.schema_version for _, document in documents}
    if len(versions) > 1:
        raise SchemaError(f"mismatched result schema versions: {sorted(versions)}")
    fragments = Path(args.fragments) if args.fragments else None
    return EvaluateInputs(_settings(args), documents, args.heatmaps, fragments)


def _reports(inputs: EvaluateInputs, document: TrialResultsDocument) -> list[SpecimenReport]:
    evaluation = inputs.settings.evaluation
    return evaluate_results(document, evaluation.face_samples, evaluation.face_noise)


def _stage_heatmaps(workflow: BaseWorkflow, inputs: EvaluateInputs) -> None:  # type: ignore[type-arg]
    if not inputs.heatmaps:
        return
    for path, document in inputs.documents:
        lookup = fragments_on_disk(inputs.fragments or path.parent / "fragments")
        for target, payload in heatmap_files(document, lookup).items():
            workflow.stager.stage(target, payload)


class EvaluateWorkflow(BaseWorkflow[argparse.Namespace, EvaluateInputs, list[SpecimenReport], list[SpecimenReport]]):
    def prepare(self, args: argparse.Namespace) -> EvaluateInputs:
        return _evaluate_inputs(args, args.results)

    def run(self, inputs: EvaluateInputs) -> list[SpecimenReport]:
        self._inputs = inputs
        return [report for _, document in inputs.documents for report in _reports(inputs, document)]

    def postprocess(self, reports: list[SpecimenReport]) -> list[SpecimenReport]:
        document = stage_evaluation(self, reports, self._inputs.settings)
        _stage_heatmaps(self, self._inputs)
        for block in document.methods:
            print(f"{block.method}: dd mean {block.dd.mean:.3f} mm (n={block.dd.n})")
        return reports


@dataclass
class CompareOutcome:
    first: list[SpecimenReport]
    second: list[SpecimenReport]
    names: tuple[str, str]


class CompareWorkflow(BaseWorkflow[argparse.Namespace, EvaluateInputs, CompareOutcome, CompareOutcome]):
    def prepare(self, args: argparse.Namespace) -> EvaluateInputs:
        return _evaluate_inputs(args, [args.a, args.b])

    def run(self, inputs: EvaluateInputs) -> CompareOutcome:
        self._inputs = inputs
        (_, first), (_, second) = inputs.documents
        return CompareOutcome(
            _reports(inputs, first), _reports(inputs, second), (first.method.value, second.method.value)
        )

    def postprocess(self, outcome: CompareOutcome) -> CompareOutcome:
        evaluation = self._inputs.settings.evaluation
        comparison = compare_methods(
            outcome.first, outcome.second, evaluation.alpha, evaluation.thresholds, outcome.names
        )
        stage_evaluation(self, [*outcome.first, *outcome.second], self._inputs.settings, comparison)
        _stage_heatmaps(self, self._inputs)
        for name, item in comparison.metrics.items():
            print(f"{name}: p = {item.test.p_value:.4g} ({item.test.method.value})")
        return outcome

