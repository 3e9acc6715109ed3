"""Assembling catalog components into slot planes, pin holes and K-wire axes.

Jig-local frame: origin at the center of the base, z out of the bone (the
base's bottom face at z = -height/2 rests on the bone), mating slots on the
+x and -x faces. A resection component's saw slot sits half a component
width beyond its attach face, tilted about the local y axis by the
component's angle; the slot normal is the tilted x axis.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from ..core import JigError
from ..geometry import Plane, RigidTransform
from .catalog import Catalog, ComponentKind

PIN_AXIS = np.array([0.0, 0.0, -1.0])
K_WIRE_AXIS = np.array([0.0, 0.0, 1.0])


def _translate(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> RigidTransform:
    return RigidTransform(np.eye(3), (x, y, z))


@dataclass(frozen=True)
class Mount:
    """One component fixed to a base mating slot ("A", "B") or to the far end of mount i ("far:i")."""

    component: str
    attach_to: str
    cut_label: str = ""


@dataclass(frozen=True)
class JigConfig:
    step: int
    base: str
    mounts: tuple[Mount, ...] = ()
    pins: Mapping[str, float] = field(default_factory=dict)
    # cut label of the slot built into a final component
    body_label: str = ""

    @property
    def components(self) -> list[str]:
        return [self.base, *(mount.component for mount in self.mounts)]


@dataclass(frozen=True, eq=False)
class SlotPlane:
    label: str
    component: str
    frame: RigidTransform
    thickness: float
    travel: float = 0.0

    @property
    def center(self) -> npt.NDArray[np.float64]:
        return self.frame.translation

    @property
    def normal(self) -> npt.NDArray[np.float64]:
        return self.frame.rotation[:, 0]

    @property
    def plane(self) -> Plane:
        return Plane.from_point_normal(self.center, self.normal, self.label)

    def transformed(self, pose: RigidTransform) -> SlotPlane:
        return SlotPlane(self.label, self.component, pose.compose(self.frame), self.thickness, self.travel)


@dataclass(frozen=True, eq=False)
class PinHole:
    id: str
    position: npt.NDArray[np.float64]
    axis: npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class KWireAxis:
    id: str
    point: npt.NDArray[np.float64]
    direction: npt.NDArray[np.float64]

    def transformed(self, pose: RigidTransform) -> KWireAxis:
        return KWireAxis(self.id, pose.apply(self.point), pose.apply_vector(self.direction))


@dataclass(frozen=True, eq=False)
class JigAssembly:
    step: int
    components: tuple[str, ...]
    slots: tuple[SlotPlane, ...]
    pin_holes: tuple[PinHole, ...]
    pin_stock: tuple[float, ...]
    k_wire_axes: tuple[KWireAxis, ...]
    pin_lengths: Mapping[str, float] = field(default_factory=dict)
    pattern_pose: RigidTransform | None = None
    pattern_size: tuple[float, float] = (0.0, 0.0)
    body_size: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def bottom_center(self) -> npt.NDArray[np.float64]:
        """Center of the face that rests on the bone."""
        return np.array([0.0, 0.0, -self.body_size[2] / 2.0])

    def slot(self, label: str) -> SlotPlane:
        for slot in self.slots:
            if slot.label == label:
                return slot
        raise JigError(f"assembly has no slot for {label!r}")

    def pin_tips(self) -> dict[str, npt.NDArray[np.float64]]:
        """Local contact points of the assigned pins."""
        holes = {hole.id: hole for hole in self.pin_holes}
        return {hid: holes[hid].position + length * holes[hid].axis for hid, length in self.pin_lengths.items()}


def _resection_slot(catalog: Catalog, attach: RigidTransform, angle_deg: float, label: str, cid: str) -> SlotPlane:
    resection = catalog.document.resection
    tilt = RigidTransform.from_euler_deg((0.0, angle_deg, 0.0))
    frame = attach.compose(_translate(resection.width / 2.0)).compose(tilt)
    return SlotPlane(label, cid, frame, resection.slot_thickness, resection.slot_travel)


def assemble(config: JigConfig, catalog: Catalog) -> JigAssembly:
    """Resolve a component configuration into jig-local features."""
    base_doc = catalog.base
    base_spec = catalog.get(config.base)
    if base_spec.kind not in (ComponentKind.BASE, ComponentKind.FINAL):
        raise JigError(f"{config.base} cannot serve as the jig body")

    mating = {
        slot.id: _translate(*slot.position).compose(RigidTransform.from_euler_deg((0.0, 0.0, slot.yaw_deg)))
        for slot in base_doc.mating_slots
    }
    slots: list[SlotPlane] = []
    if base_spec.kind is ComponentKind.FINAL:
        if config.mounts:
            raise JigError("the final component takes no further components")
        body_slot = _resection_slot(
            catalog, mating[base_spec.mount], base_spec.angle_deg, config.body_label, base_spec.id
        )
        slots.append(body_slot)

    used: set[str] = set()
    far_frames: list[RigidTransform] = []
    kinds: list[ComponentKind] = []
    for index, mount in enumerate(config.mounts):
        spec = catalog.get(mount.component)
        if mount.attach_to in used:
            raise JigError(f"mount {index}: {mount.attach_to} is already occupied")
        if mount.attach_to in mating:
            attach = mating[mount.attach_to]
            if spec.kind is not ComponentKind.RESECTION:
                raise JigError(f"incompatible mating: {spec.id} ({spec.kind.value}) on base slot {mount.attach_to}")
        elif mount.attach_to.startswith("far:"):
            try:
                parent = int(mount.attach_to.split(":", 1)[1])
            except ValueError as exc:
                raise JigError(f"mount {index}: bad attachment {mount.attach_to!r}") from exc
            if not 0 <= parent < index:
                raise JigError(f"mount {index}: attaches to missing component {parent}")
            expected = ComponentKind.EXTENSION if kinds[parent] is ComponentKind.RESECTION else ComponentKind.RESECTION
            if spec.kind is not expected:
                raise JigError(
                    f"incompatible mating: {spec.id} ({spec.kind.value}) after {kinds[parent].value} component"
                )
            attach = far_frames[parent]
        else:
            raise JigError(f"mount {index}: unknown attachment {mount.attach_to!r}")
        used.add(mount.attach_to)

        if spec.kind is ComponentKind.RESECTION:
            slots.append(_resection_slot(catalog, attach, spec.angle_deg, mount.cut_label, spec.id))
            far_frames.append(attach.compose(_translate(catalog.document.resection.width)))
        else:
            far_frames.append(attach.compose(_translate(spec.length)))
        kinds.append(spec.kind)

    holes = tuple(PinHole(h.id, np.asarray(h.position, dtype=np.float64), PIN_AXIS) for h in base_doc.pin_holes)
    hole_ids = {hole.id for hole in holes}
    pin_lengths: dict[str, float] = {}
    for hole_id, length in config.pins.items():
        if hole_id not in hole_ids:
            raise JigError(f"pin assigned to nonexistent hole {hole_id!r}")
        if length not in catalog.pin_lengths:
            raise JigError(f"pin length {length} mm is not in the catalog")
        pin_lengths[hole_id] = float(length)

    k_wires = tuple(
        KWireAxis(h.id, np.asarray(h.position, dtype=np.float64), K_WIRE_AXIS) for h in base_doc.k_wire_holes
    )
    pattern = None
    if base_spec.kind is ComponentKind.BASE:
        pattern = _translate(0.0, 0.0, base_doc.size[2] / 2.0)
    return JigAssembly(
        step=config.step,
        components=tuple(config.components),
        slots=tuple(slots),
        pin_holes=holes,
        pin_stock=catalog.pin_lengths,
        k_wire_axes=k_wires,
        pin_lengths=pin_lengths,
        pattern_pose=pattern,
        pattern_size=(base_doc.pattern.width, base_doc.pattern.height),
        body_size=base_doc.size,
    )

