"""Modular jig component catalog.

The packaged catalog lives in ``osteoplan/resource/jig_catalog.json``;
OSTEOPLAN_CATALOG (or an explicit path) replaces it.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import orjson
from pydantic import BaseModel, Field, ValidationError, field_validator

from ..core import JigError, SchemaError

ENV_CATALOG = "OSTEOPLAN_CATALOG"


class ComponentKind(str, enum.Enum):
    BASE = "base"
    RESECTION = "resection"
    EXTENSION = "extension"
    PIN = "pin"
    FINAL = "final"


class HoleDocument(BaseModel):
    id: str
    position: tuple[float, float, float]


class MatingSlotDocument(BaseModel):
    id: str
    position: tuple[float, float, float]
    yaw_deg: float = 0.0


class PatternDocument(BaseModel):
    width: float = Field(gt=0)
    height: float = Field(gt=0)


class BaseDocument(BaseModel):
    id: str = "base"
    size: tuple[float, float, float]
    k_wire_holes: list[HoleDocument]
    pin_holes: list[HoleDocument] = Field(min_length=1)
    mating_slots: list[MatingSlotDocument]
    pattern: PatternDocument

    @field_validator("size")
    @classmethod
    def positive_size(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if min(value) <= 0:
            raise ValueError("base dimensions must be positive")
        return value

    @field_validator("k_wire_holes")
    @classmethod
    def two_k_wires(cls, value: list[HoleDocument]) -> list[HoleDocument]:
        if len(value) != 2:
            raise ValueError(f"the base carries exactly 2 K-wire holes, got {len(value)}")
        return value

    @field_validator("mating_slots")
    @classmethod
    def two_mating_slots(cls, value: list[MatingSlotDocument]) -> list[MatingSlotDocument]:
        if len(value) != 2:
            raise ValueError(f"the base carries exactly 2 mating slots, got {len(value)}")
        return value


class ResectionDocument(BaseModel):
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    slot_thickness: float = Field(gt=0)
    # how far the slotted block slides along its own normal, either way
    slot_travel: float = Field(default=0.0, ge=0)
    angles_deg: list[float] = Field(min_length=1)


class ExtensionDocument(BaseModel):
    lengths: list[float] = Field(min_length=1)

    @field_validator("lengths")
    @classmethod
    def positive_lengths(cls, value: list[float]) -> list[float]:
        if min(value) <= 0:
            raise ValueError("extension lengths must be positive")
        return value


class FinalDocument(BaseModel):
    mounts: list[str] = Field(min_length=1)
    angles_deg: list[float] = Field(min_length=1)


class PinDocument(BaseModel):
    diameter: float = Field(gt=0)
    lengths: list[float] = Field(min_length=1)

    @field_validator("lengths")
    @classmethod
    def positive_lengths(cls, value: list[float]) -> list[float]:
        if min(value) <= 0:
            raise ValueError("pin lengths must be positive")
        return sorted(value)


class CatalogDocument(BaseModel):
    schema_version: str = "1.0"
    notes: str = ""
    base: BaseDocument
    resection: ResectionDocument
    extension: ExtensionDocument
    final: FinalDocument
    pins: PinDocument


@dataclass(frozen=True)
class ComponentSpec:
    kind: ComponentKind
    id: str
    # (x, y, z) extent in mm; resection: (width, slot_thickness, height)
    dimensions: tuple[float, ...]
    angle_deg: float = 0.0
    length: float = 0.0
    mount: str = ""


def _angle_tag(angle: float) -> str:
    return f"{angle:+g}"


@dataclass(frozen=True, eq=False)
class Catalog:
    document: CatalogDocument
    components: dict[str, ComponentSpec] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        doc = self.document
        components = {doc.base.id: ComponentSpec(ComponentKind.BASE, doc.base.id, tuple(doc.base.size))}
        res = doc.resection
        for angle in res.angles_deg:
            cid = f"res{_angle_tag(angle)}"
            components[cid] = ComponentSpec(
                ComponentKind.RESECTION, cid, (res.width, res.slot_thickness, res.height), angle_deg=angle
            )
        for length in doc.extension.lengths:
            cid = f"ext-{length:g}"
            components[cid] = ComponentSpec(ComponentKind.EXTENSION, cid, (length,), length=length)
        mating_ids = {slot.id for slot in doc.base.mating_slots}
        for mount in doc.final.mounts:
            if mount not in mating_ids:
                raise SchemaError(f"final component mounts on unknown mating slot {mount!r}")
            for angle in doc.final.angles_deg:
                cid = f"final-{mount}{_angle_tag(angle)}"
                components[cid] = ComponentSpec(
                    ComponentKind.FINAL, cid, tuple(doc.base.size), angle_deg=angle, mount=mount
                )
        for length in doc.pins.lengths:
            cid = f"pin-{length:g}"
            components[cid] = ComponentSpec(ComponentKind.PIN, cid, (doc.pins.diameter, length), length=length)
        object.__setattr__(self, "components", components)

    def get(self, component_id: str) -> ComponentSpec:
        try:
            return self.components[component_id]
        except KeyError as exc:
            raise JigError(f"catalog has no component {component_id!r}") from exc

    def of_kind(self, kind: ComponentKind) -> list[ComponentSpec]:
        return [spec for spec in self.components.values() if spec.kind is kind]

    @property
    def base(self) -> BaseDocument:
        return self.document.base

    @property
    def pin_lengths(self) -> tuple[float, ...]:
        return tuple(self.document.pins.lengths)

    def resection_id(self, angle_deg: float) -> str:
        return self.get(f"res{_angle_tag(angle_deg)}").id

    def extension_id(self, length: float) -> str:
        return self.get(f"ext-{length:g}").id


def default_catalog_path() -> Path:
    return Path(str(resources.files("osteoplan").joinpath("resource", "jig_catalog.json")))


def load_catalog(path: str | Path | None = None) -> Catalog:
    """Read a catalog file; falls back to $OSTEOPLAN_CATALOG, then the packaged catalog."""
    source = Path(path or os.getenv(ENV_CATALOG) or default_catalog_path())
    try:
        document = CatalogDocument.model_validate(orjson.loads(source.read_bytes()))
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise SchemaError(f"invalid jig catalog {source}: {exc}") from exc
    return Catalog(document)
