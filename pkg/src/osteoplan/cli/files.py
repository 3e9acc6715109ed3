"""Small file formats used only by the command line: landmarks and jig reports."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import orjson
from pydantic import BaseModel, Field, ValidationError

from ..core import SchemaError
from ..geometry import LandmarkSet
from ..jig import JigStage, placement_report

SCHEMA_VERSION = "1.0"
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def json_bytes(payload: Any) -> bytes:
    return orjson.dumps(payload, option=JSON_OPTIONS)


class LandmarkDocument(BaseModel):
    asis_left: list[float] = Field(min_length=3, max_length=3)
    asis_right: list[float] = Field(min_length=3, max_length=3)
    psis_left: list[float] = Field(min_length=3, max_length=3)
    psis_right: list[float] = Field(min_length=3, max_length=3)
    hip_center: list[float] | None = Field(default=None, min_length=3, max_length=3)


def read_landmarks(path: str | Path) -> LandmarkSet:
    try:
        document = LandmarkDocument.model_validate(orjson.loads(Path(path).read_bytes()))
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise SchemaError(f"invalid landmark file {path}: {exc}") from exc
    return LandmarkSet(**document.model_dump())


def landmarks_bytes(landmarks: LandmarkSet) -> bytes:
    return json_bytes(landmarks.to_dict())


def jig_report(stages: list[JigStage]) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "jig",
        "stages": [
            {
                "step": stage.step,
                "labels": list(stage.labels),
                "pins": dict(stage.config.pins),
                "placement": placement_report(stage.placement, stage.assembly),
                "findings": [str(finding) for finding in stage.findings],
            }
            for stage in stages
        ],
    }
