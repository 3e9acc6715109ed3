"""Modular resection jig: catalog, assembly, pose fitting and the staged sequence."""

from .assembly import JigAssembly, JigConfig, KWireAxis, Mount, PinHole, SlotPlane, assemble
from .catalog import Catalog, ComponentKind, ComponentSpec, default_catalog_path, load_catalog
from .placement import (
    JigPlacement,
    PinSelection,
    SlotResidual,
    evaluate_placement,
    fit_jig_pose,
    initial_pose,
    pattern_pose,
    placement_report,
    pose_objective,
    select_pins,
    slot_residuals,
)
from .sequence import JigStage, resection_sequence

__all__ = [
    "Catalog",
    "ComponentKind",
    "ComponentSpec",
    "JigAssembly",
    "JigConfig",
    "JigPlacement",
    "JigStage",
    "KWireAxis",
    "Mount",
    "PinHole",
    "PinSelection",
    "SlotPlane",
    "SlotResidual",
    "assemble",
    "default_catalog_path",
    "evaluate_placement",
    "fit_jig_pose",
    "initial_pose",
    "load_catalog",
    "pattern_pose",
    "placement_report",
    "pose_objective",
    "resection_sequence",
    "select_pins",
    "slot_residuals",
]
