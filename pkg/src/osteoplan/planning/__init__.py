"""Virtual tumor placement and margin-respecting cutting planes."""

from .base import default_cut_normals, validate_plan
from .model import (
    CutLabel,
    PlannedCut,
    ResectionPlan,
    Side,
    TumorModel,
    generate_margin_planes,
    make_tumor,
    planned_margin,
)
from .schema import PlanDocument, plan_bytes, plan_from_document, plan_to_document, read_plan, write_plan

__all__ = [
    "CutLabel",
    "PlanDocument",
    "PlannedCut",
    "ResectionPlan",
    "Side",
    "TumorModel",
    "default_cut_normals",
    "generate_margin_planes",
    "make_tumor",
    "plan_bytes",
    "plan_from_document",
    "plan_to_document",
    "planned_margin",
    "read_plan",
    "validate_plan",
    "write_plan",
]
