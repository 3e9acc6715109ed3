"""Synthetic end-to-end study: plan, jig, simulate both methods, evaluate and compare.

Every output depends only on the settings and the seed.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..config import Settings, load_settings
from ..core import BaseWorkflow, Finding, JigError
from ..evaluation import Comparison, SpecimenReport, compare_methods, evaluate_results
from ..geometry import PelvicFrame, TriangleMesh, stl_bytes
from ..jig import JigStage, load_catalog, pattern_pose, resection_sequence
from ..planning import ResectionPlan, Side, plan_bytes
from ..registration import SessionDocument, report_bytes, run_session
from ..simulation import (
    MethodEnum,
    TrialInput,
    TrialResultsDocument,
    allocate_methods,
    results_bytes,
    results_document,
    run_batch,
)
from .commands import build_plan, guide_error, heatmap_files, stage_evaluation, stage_fragments, trial_fragments
from .files import jig_report, json_bytes, landmarks_bytes
from .synthetic import specimen_id, synthetic_hemipelvis

logger = logging.getLogger(__name__)

SPECIMEN_COUNT = 5


@dataclass
class DemoSpecimen:
    plan: ResectionPlan
    bone: TriangleMesh
    frame: PelvicFrame
    method: MethodEnum
    stages: list[JigStage] = field(default_factory=list)
    findings: list[Finding] = field(default_factory=list)


@dataclass
class DemoInputs:
    settings: Settings
    seed: int
    specimens: list[DemoSpecimen]
    heatmaps: bool


@dataclass
class DemoOutcome:
    specimens: list[DemoSpecimen]
    documents: dict[MethodEnum, TrialResultsDocument]
    reports: dict[MethodEnum, list[SpecimenReport]]
    comparison: Comparison
    fragments: dict[Path, TriangleMesh] = field(default_factory=dict)


class DemoWorkflow(BaseWorkflow[argparse.Namespace, DemoInputs, DemoOutcome, DemoOutcome]):
    def prepare(self, args: argparse.Namespace) -> DemoInputs:
        settings = load_settings(args.config)
        seed = 0 if args.seed is None else args.seed
        count = getattr(args, "specimens", SPECIMEN_COUNT) or SPECIMEN_COUNT
        allocation = allocate_methods([specimen_id(i) for i in range(count)], seed)
        catalog = load_catalog(settings.catalog_path())

        specimens = []
        for index in range(count):
            for side in (Side.LEFT, Side.RIGHT):
                synthetic = synthetic_hemipelvis(index, side, seed)
                plan, frame, findings = build_plan(
                    synthetic.specimen_id, side, synthetic.mesh, synthetic.landmarks, settings
                )
                specimen = DemoSpecimen(plan, synthetic.mesh, frame, allocation[plan.key], findings=findings)
                try:
                    specimen.stages = resection_sequence(
                        plan, catalog, synthetic.mesh, settings.jig.angle_weight, settings.jig.feasibility_limit
                    )
                    specimen.plan = plan.with_pattern_pose(
                        pattern_pose(specimen.stages[0].placement, specimen.stages[0].assembly)
                    )
                except JigError as exc:
                    logger.warning("%s/%s: %s", plan.specimen_id, side.value, exc)
                    specimen.findings.append(Finding("jig", str(exc)))
                specimens.append(specimen)
                self.stager.stage(f"specimens/{plan.specimen_id}_{side.value}.stl", stl_bytes(synthetic.mesh))
                self.stager.stage(
                    f"specimens/{plan.specimen_id}_{side.value}_landmarks.json", landmarks_bytes(synthetic.landmarks)
                )
        return DemoInputs(settings, seed, specimens, args.heatmaps)

    def run(self, inputs: DemoInputs) -> DemoOutcome:
        self._inputs = inputs
        settings = inputs.settings
        propagate = settings.registration.propagate_to_guided

        documents: dict[MethodEnum, TrialResultsDocument] = {}
        reports: dict[MethodEnum, list[SpecimenReport]] = {}
        fragments: dict[Path, TriangleMesh] = {}
        for method in (MethodEnum.FREEHAND, MethodEnum.GUIDED):
            chosen = [s for s in inputs.specimens if s.method is method]
            trials = [
                TrialInput(
                    s.plan,
                    s.bone,
                    s.frame,
                    method,
                    guide_error(s.plan, settings, inputs.seed) if method is MethodEnum.GUIDED and propagate else None,
                )
                for s in chosen
            ]
            model = settings.preset(method)
            results = self.timed(
                run_batch,
                f"simulate {method.value}",
                trials,
                model,
                [inputs.seed] * len(trials),
                settings.simulation.kerf,
            )
            for trial in results.values():
                stage_fragments(self, trial)
                fragments.update(trial_fragments(trial))
            documents[method] = results_document(results.values(), method, settings.simulation.kerf, model)
            reports[method] = self.timed(
                evaluate_results,
                f"evaluate {method.value}",
                documents[method],
                settings.evaluation.face_samples,
                settings.evaluation.face_noise,
            )

        evaluation = settings.evaluation
        comparison = self.timed(
            compare_methods,
            "compare",
            reports[MethodEnum.GUIDED],
            reports[MethodEnum.FREEHAND],
            evaluation.alpha,
            evaluation.thresholds,
            (MethodEnum.GUIDED.value, MethodEnum.FREEHAND.value),
        )
        return DemoOutcome(inputs.specimens, documents, reports, comparison, fragments)

    def postprocess(self, outcome: DemoOutcome) -> DemoOutcome:
        inputs = self._inputs
        for specimen in outcome.specimens:
            stem = f"plans/{specimen.plan.specimen_id}_{specimen.plan.side.value}"
            self.stager.stage(f"{stem}_plan.json", plan_bytes(specimen.plan))
            if specimen.stages:
                self.stager.stage(f"{stem}_jig.json", json_bytes(jig_report(specimen.stages)))

        session = SessionDocument(
            marker_edge=inputs.settings.registration.marker_edge,
            fiducial_noise=inputs.settings.registration.fiducial_noise,
            tracking_rotation_noise=inputs.settings.registration.tracking_rotation_noise,
            tracking_translation_noise=inputs.settings.registration.tracking_translation_noise,
            observation_count=inputs.settings.registration.tracking_frames,
            seed=inputs.seed,
        )
        self.stager.stage("registration.json", report_bytes(run_session(session)))

        for method, document in outcome.documents.items():
            self.stager.stage(f"results_{method.value}.json", results_bytes(document))
            if inputs.heatmaps:
                for target, payload in heatmap_files(document, outcome.fragments.get).items():
                    self.stager.stage(target, payload)

        reports = [*outcome.reports[MethodEnum.GUIDED], *outcome.reports[MethodEnum.FREEHAND]]
        stage_evaluation(self, reports, inputs.settings, outcome.comparison)
        findings = [f"{s.plan.specimen_id}/{s.plan.side.value} {f}" for s in outcome.specimens for f in s.findings]
        if findings:
            self.stager.stage("findings.json", json_bytes({"findings": findings}))

        for name, item in outcome.comparison.metrics.items():
            print(f"{name}: p = {item.test.p_value:.4g} ({item.test.method.value})")
        return outcome
