"""Three-stage resection sequence for a four-cut periacetabular plan.

Stage 1: base + resection + extension + resection, first two cuts.
Stage 2: the extension chain is swapped for a resection component on the
other mating slot, third cut.
Stage 3: the base is swapped for the final component on the same K-wires,
fourth cut.

Stock is chosen per stage from the catalog. Stage 1 picks the combination
whose closed-form pose matches the two planned planes best; once the base is
pinned its pose is fixed, so stages 2 and 3 pick the component that best
fits their cut at that pose. Their distance is taken up by the slide of the
slotted block; whatever the travel and the stock angles cannot take up is
reported as a jig-residual finding.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

from ..core import Finding, JigError
from ..geometry import TriangleMesh
from ..planning import ResectionPlan
from .assembly import JigAssembly, JigConfig, Mount, assemble
from .catalog import Catalog, ComponentKind
from .placement import JigPlacement, evaluate_placement, fit_jig_pose, initial_pose, pose_objective

logger = logging.getLogger(__name__)

CUTS_PER_PLAN = 4


@dataclass(frozen=True, eq=False)
class JigStage:
    step: int
    config: JigConfig
    assembly: JigAssembly
    labels: tuple[str, ...]
    placement: JigPlacement
    findings: tuple[Finding, ...] = field(default=())


def _stage_one_configs(catalog: Catalog, labels: list[str]) -> list[JigConfig]:
    base = catalog.base.id
    angles = catalog.document.resection.angles_deg
    configs = []
    for first, second, length in itertools.product(angles, angles, catalog.document.extension.lengths):
        mounts = (
            Mount(catalog.resection_id(first), "A", labels[0]),
            Mount(catalog.extension_id(length), "far:0"),
            Mount(catalog.resection_id(second), "far:1", labels[1]),
        )
        configs.append(JigConfig(1, base, mounts))
    return configs


def _with_pins(config: JigConfig, placement: JigPlacement) -> JigConfig:
    pins = {pin.hole_id: pin.length for pin in placement.pins}
    return JigConfig(config.step, config.base, config.mounts, pins, config.body_label)


def _fixed_stage(
    step: int,
    candidates: list[JigConfig],
    label: str,
    plan: ResectionPlan,
    catalog: Catalog,
    stage_one: JigPlacement,
    bone: TriangleMesh | None,
    angle_weight: float,
    feasibility_limit: float,
) -> JigStage:
    best: tuple[float, int, JigAssembly, JigPlacement] | None = None
    for index, config in enumerate(candidates):
        assembly = assemble(config, catalog)
        placement = evaluate_placement(assembly, plan, stage_one.pose, bone, angle_weight)
        score = next(r for r in placement.residuals if r.label == label).magnitude(angle_weight)
        if best is None or score < best[0] - 1e-12:
            best = (score, index, assembly, placement)
    assert best is not None
    score, index, assembly, placement = best
    findings: tuple[Finding, ...] = ()
    if score >= feasibility_limit:
        findings = (Finding("jig-residual", f"step {step}: slot {label} off by {score:.2f} mm at the pinned pose"),)
        logger.warning("%s", findings[0])
    return JigStage(step, candidates[index], assembly, (label,), placement, findings)


def resection_sequence(
    plan: ResectionPlan,
    catalog: Catalog,
    bone: TriangleMesh | None = None,
    angle_weight: float = 1.0,
    feasibility_limit: float = 10.0,
) -> list[JigStage]:
    if len(plan.cuts) != CUTS_PER_PLAN:
        raise JigError(f"the staged jig template needs {CUTS_PER_PLAN} cuts, plan has {len(plan.cuts)}")
    labels = plan.labels

    # stage 1: rank every stock combination by its closed-form pose
    ranked = []
    for index, config in enumerate(_stage_one_configs(catalog, labels)):
        assembly = assemble(config, catalog)
        start, correction = initial_pose(assembly, plan, bone)
        ranked.append((round(pose_objective(assembly, plan, start, angle_weight), 9), correction, index, config))
    ranked.sort(key=lambda item: item[:3])
    config_one = ranked[0][3]
    assembly_one = assemble(config_one, catalog)
    placement_one = fit_jig_pose(assembly_one, plan, bone, angle_weight, feasibility_limit)
    config_one = _with_pins(config_one, placement_one)
    assembly_one = assemble(config_one, catalog)
    stages = [JigStage(1, config_one, assembly_one, (labels[0], labels[1]), placement_one)]

    first_mount = config_one.mounts[0]
    pins = config_one.pins
    stage_two = [
        JigConfig(2, catalog.base.id, (first_mount, Mount(catalog.resection_id(angle), "B", labels[2])), pins)
        for angle in catalog.document.resection.angles_deg
    ]
    stages.append(
        _fixed_stage(2, stage_two, labels[2], plan, catalog, placement_one, bone, angle_weight, feasibility_limit)
    )

    stage_three = [
        JigConfig(3, spec.id, (), pins, labels[3]) for spec in catalog.of_kind(ComponentKind.FINAL)
    ]
    stages.append(
        _fixed_stage(3, stage_three, labels[3], plan, catalog, placement_one, bone, angle_weight, feasibility_limit)
    )
    for stage in stages:
        logger.info("jig step %d: %s -> %s", stage.step, ", ".join(stage.assembly.components), ", ".join(stage.labels))
    return stages
