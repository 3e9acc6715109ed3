from __future__ import annotations

import numpy as np
import pytest

from osteoplan.cli.commands import build_plan
from osteoplan.cli.synthetic import SyntheticSpecimen, box_mesh, synthetic_hemipelvis
from osteoplan.config import Settings, load_settings
from osteoplan.geometry import LandmarkSet, PelvicFrame, RigidTransform, TriangleMesh, build_pelvic_frame
from osteoplan.jig import Catalog, JigConfig, Mount, assemble, load_catalog
from osteoplan.planning import CutLabel, PlannedCut, ResectionPlan, Side, make_tumor


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch) -> None:
    for name in ("OSTEOPLAN_CONFIG", "OSTEOPLAN_CATALOG", "PATH_LOG"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def cube() -> TriangleMesh:
    """Closed 20 mm cube centred on the origin."""
    return box_mesh((-10.0, -10.0, -10.0), (10.0, 10.0, 10.0), divisions=4)


@pytest.fixture
def axis_landmarks() -> LandmarkSet:
    """Landmarks whose pelvic frame is the world frame."""
    return LandmarkSet(
        asis_left=(0.0, 120.0, 0.0),
        asis_right=(0.0, -120.0, 0.0),
        psis_left=(-150.0, 40.0, 0.0),
        psis_right=(-150.0, -40.0, 0.0),
        hip_center=(-25.0, 85.0, -75.0),
    )


@pytest.fixture
def world_frame(axis_landmarks: LandmarkSet) -> PelvicFrame:
    return build_pelvic_frame(axis_landmarks)


@pytest.fixture(scope="session")
def settings() -> Settings:
    return load_settings()


@pytest.fixture(scope="session")
def catalog() -> Catalog:
    return load_catalog()


@pytest.fixture(scope="session")
def hemipelvis() -> SyntheticSpecimen:
    return synthetic_hemipelvis(0, "left", seed=3)


@pytest.fixture(scope="session")
def hemipelvis_plan(hemipelvis: SyntheticSpecimen, settings: Settings) -> tuple[ResectionPlan, PelvicFrame]:
    plan, frame, findings = build_plan(
        hemipelvis.specimen_id, hemipelvis.side, hemipelvis.mesh, hemipelvis.landmarks, settings
    )
    assert findings == []
    return plan, frame


@pytest.fixture(scope="session")
def four_cut_plan(catalog: Catalog) -> ResectionPlan:
    """Four planes taken from jig slots at a known pose, so the staged jig fits them exactly."""
    supra, infra, pubic, aux = (label.value for label in CutLabel)
    pose = RigidTransform.from_euler_deg((12.0, -20.0, 35.0), (40.0, -15.0, 60.0))
    stage_one = assemble(
        JigConfig(1, "base", (Mount("res+0", "A", supra), Mount("ext-25", "far:0"), Mount("res+15", "far:1", infra))),
        catalog,
    )
    stage_two = assemble(JigConfig(2, "base", (Mount("res+0", "A", supra), Mount("res-15", "B", pubic))), catalog)
    stage_three = assemble(JigConfig(3, "final-B+0", (), {}, aux), catalog)
    tumor = make_tumor(20.0, 5.0, hip_center=pose.apply((0.0, 0.0, -60.0)))
    slots = [*stage_one.slots, stage_two.slot(pubic), stage_three.slot(aux)]
    cuts = tuple(PlannedCut.from_plane(slot.transformed(pose).plane, slot.label, tumor) for slot in slots)
    return ResectionPlan("S01", Side.LEFT, tumor, cuts)
