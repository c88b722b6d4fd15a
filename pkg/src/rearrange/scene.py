"""Object-level world state: load, validate, mutate, and serialize scenes.

A scene is an immutable value; every mutation returns a new scene and
re-runs full validation, so any scene you can hold passes its invariants.
Objects flagged `stacked_on` may overlap the named support (an object "on"
the plate); every other overlap is illegal, including between two objects
stacked on the same support.
"""

import json
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from .errors import SceneParseError, SceneValidationError
from .geometry import Calibration, OrientedBox, Point2, corners, overlaps


@dataclass(frozen=True)
class ObjectRecord:
    """One grounded object: category, oriented box, and mobility flags.

    The centroid and rotation are derived from the box: with no segmentation
    masks in simulation the mask centroid and the box center coincide.
    """

    id: str
    category: str
    box: OrientedBox
    movable: bool = True
    stacked_on: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("object id must be nonempty")
        if not self.category:
            raise ValueError(f"object {self.id!r}: category must be nonempty")

    @property
    def centroid(self) -> Point2:
        return self.box.center

    @property
    def rotation(self) -> float:
        return self.box.theta


@dataclass(frozen=True)
class Workspace:
    width_px: int
    height_px: int
    calibration: Calibration = field(default_factory=lambda: Calibration(1000.0))

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("workspace dimensions must be positive")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width_px, self.height_px)


@dataclass(frozen=True)
class Placement:
    """Predicted target pose for one object, plus an optional stacking support."""

    object_id: str
    x: float
    y: float
    rotation: float
    stacked_on: Optional[str] = None
    repaired: bool = False

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.rotation)):
            raise ValueError(f"placement for {self.object_id!r} must be finite")


@dataclass(frozen=True)
class Scene:
    workspace: Workspace
    objects: Tuple[ObjectRecord, ...]

    def object_ids(self) -> List[str]:
        return [o.id for o in self.objects]

    def get(self, object_id: str) -> ObjectRecord:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def has(self, object_id: str) -> bool:
        return any(o.id == object_id for o in self.objects)


def in_bounds(box: OrientedBox, workspace: Workspace, tol: float = 1e-9) -> bool:
    """All four corners inside the closed workspace rectangle."""
    for p in corners(box):
        if not (-tol <= p.x <= workspace.width_px + tol and -tol <= p.y <= workspace.height_px + tol):
            return False
    return True


def _stack_pair_ok(upper: ObjectRecord, lower: ObjectRecord) -> bool:
    small, big = (upper, lower) if upper.box.area <= lower.box.area else (lower, upper)
    from .geometry import contains_point

    return contains_point(big.box, small.box.center)


def validate_scene(scene: Scene) -> None:
    """Raise SceneValidationError naming the offending object ids on any violation."""
    seen = set()
    by_id = {}
    for obj in scene.objects:
        if obj.id in seen:
            raise SceneValidationError(f"duplicate object id {obj.id!r}", [obj.id])
        seen.add(obj.id)
        by_id[obj.id] = obj
    for obj in scene.objects:
        if not in_bounds(obj.box, scene.workspace):
            raise SceneValidationError(
                f"object {obj.id!r} extends outside the {scene.workspace.width_px}x"
                f"{scene.workspace.height_px} workspace",
                [obj.id],
            )
        if obj.stacked_on is not None:
            if obj.stacked_on not in by_id:
                raise SceneValidationError(
                    f"object {obj.id!r} is stacked on unknown object {obj.stacked_on!r}",
                    [obj.id],
                )
            if obj.stacked_on == obj.id:
                raise SceneValidationError(f"object {obj.id!r} cannot stack on itself", [obj.id])
            if not _stack_pair_ok(obj, by_id[obj.stacked_on]):
                raise SceneValidationError(
                    f"stacked pair ({obj.id!r} on {obj.stacked_on!r}) violates containment: "
                    "the smaller box's center must lie inside the larger box",
                    [obj.id, obj.stacked_on],
                )
    objs = scene.objects
    for i in range(len(objs)):
        for j in range(i + 1, len(objs)):
            a, b = objs[i], objs[j]
            if a.stacked_on == b.id or b.stacked_on == a.id:
                continue
            if overlaps(a.box, b.box):
                raise SceneValidationError(
                    f"objects {a.id!r} and {b.id!r} overlap without a stacking flag",
                    [a.id, b.id],
                )


def _workspace_to_dict(ws: Workspace) -> dict:
    return {
        "width_px": ws.width_px,
        "height_px": ws.height_px,
        "px_per_meter": ws.calibration.px_per_meter,
        "origin_world": list(ws.calibration.origin_world),
        "table_height_m": ws.calibration.table_height,
    }


def _object_to_dict(obj: ObjectRecord) -> dict:
    doc = {
        "id": obj.id,
        "category": obj.category,
        "box": {
            "cx": obj.box.cx,
            "cy": obj.box.cy,
            "w": obj.box.w,
            "h": obj.box.h,
            "theta": obj.box.theta,
        },
        "movable": obj.movable,
    }
    if obj.stacked_on is not None:
        doc["stacked_on"] = obj.stacked_on
    return doc


def _workspace_from_dict(doc: dict) -> Workspace:
    try:
        calib = Calibration(
            px_per_meter=float(doc["px_per_meter"]),
            origin_world=(float(doc["origin_world"][0]), float(doc["origin_world"][1])),
            table_height=float(doc["table_height_m"]),
        )
        return Workspace(int(doc["width_px"]), int(doc["height_px"]), calib)
    except (KeyError, TypeError, IndexError) as exc:
        raise SceneParseError(f"malformed workspace document: {exc}") from exc


def _object_from_dict(doc: dict) -> ObjectRecord:
    try:
        b = doc["box"]
        box = OrientedBox(float(b["cx"]), float(b["cy"]), float(b["w"]), float(b["h"]), float(b["theta"]))
        return ObjectRecord(
            id=str(doc["id"]),
            category=str(doc["category"]),
            box=box,
            movable=bool(doc["movable"]),
            stacked_on=doc.get("stacked_on"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneParseError(f"malformed object document ({doc.get('id', '?')!r}): {exc}") from exc


def scene_to_dict(scene: Scene) -> dict:
    return {
        "workspace": _workspace_to_dict(scene.workspace),
        "objects": [_object_to_dict(o) for o in scene.objects],
    }


def scene_from_dict(doc: dict, validate: bool = True) -> Scene:
    if not isinstance(doc, dict) or "workspace" not in doc or "objects" not in doc:
        raise SceneParseError("scene document must have 'workspace' and 'objects'")
    scene = Scene(
        workspace=_workspace_from_dict(doc["workspace"]),
        objects=tuple(_object_from_dict(o) for o in doc["objects"]),
    )
    if validate:
        validate_scene(scene)
    return scene


def save_scene(scene: Scene) -> bytes:
    return (json.dumps(scene_to_dict(scene), indent=2) + "\n").encode("utf-8")


def load_scene(data: bytes) -> Scene:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SceneParseError(f"scene document is not valid JSON: {exc}") from exc
    return scene_from_dict(doc)


@dataclass(frozen=True)
class PoseCheck:
    """Outcome of probing one candidate pose against a scene."""

    in_bounds: bool
    blockers: Tuple[str, ...]
    stacking_ok: bool

    @property
    def ok(self) -> bool:
        return self.in_bounds and not self.blockers and self.stacking_ok


def check_pose(scene: Scene, object_id: str, box: OrientedBox, stacked_on: Optional[str] = None) -> PoseCheck:
    """Probe a pose for `object_id`: bounds, overlaps, and stacking containment.

    Overlap with the stacking support is permitted; everything else blocks.
    """
    bounds_ok = in_bounds(box, scene.workspace)
    blockers = []
    stacking_ok = True
    moved = scene.get(object_id)
    for other in scene.objects:
        if other.id == object_id:
            continue
        if other.stacked_on == object_id or stacked_on == other.id:
            continue
        if overlaps(box, other.box):
            blockers.append(other.id)
    if stacked_on is not None:
        if not scene.has(stacked_on) or stacked_on == object_id:
            stacking_ok = False
        else:
            support = scene.get(stacked_on)
            probe = ObjectRecord(moved.id, moved.category, box, moved.movable, stacked_on)
            stacking_ok = _stack_pair_ok(probe, support)
    return PoseCheck(bounds_ok, tuple(blockers), stacking_ok)


def apply_move(scene: Scene, object_id: str, placement: Placement) -> Scene:
    """Return a new scene with the object at the placement pose; input unchanged."""
    if placement.object_id != object_id:
        raise ValueError(f"placement is for {placement.object_id!r}, not {object_id!r}")
    try:
        obj = scene.get(object_id)
    except KeyError:
        raise SceneValidationError(f"unknown object id {object_id!r}", [object_id]) from None
    if not obj.movable:
        raise SceneValidationError(f"object {object_id!r} is not movable", [object_id])
    new_box = obj.box.moved(placement.x, placement.y, placement.rotation)
    new_obj = replace(obj, box=new_box, stacked_on=placement.stacked_on)
    new_scene = Scene(
        workspace=scene.workspace,
        objects=tuple(new_obj if o.id == object_id else o for o in scene.objects),
    )
    validate_scene(new_scene)
    return new_scene


def apply_moves(scene: Scene, placements: Sequence[Placement]) -> Scene:
    """Move several objects at once, validating only the final configuration.

    Used by the baselines, whose layouts are end states: intermediate
    single-move validity is not meaningful for them.
    """
    by_id = {p.object_id: p for p in placements}
    if len(by_id) != len(placements):
        raise ValueError("duplicate object ids in placements")
    new_objects = []
    for obj in scene.objects:
        p = by_id.pop(obj.id, None)
        if p is None:
            new_objects.append(obj)
            continue
        if not obj.movable:
            raise SceneValidationError(f"object {obj.id!r} is not movable", [obj.id])
        new_objects.append(replace(obj, box=obj.box.moved(p.x, p.y, p.rotation), stacked_on=p.stacked_on))
    if by_id:
        missing = sorted(by_id)
        raise SceneValidationError(f"unknown object ids {missing}", missing)
    new_scene = Scene(scene.workspace, tuple(new_objects))
    validate_scene(new_scene)
    return new_scene


def relevant_objects(scene: Scene, categories: Sequence[str]) -> List[ObjectRecord]:
    """Objects whose category matches any entry (case-insensitive); "others" never matches."""
    wanted = {c.lower() for c in categories} - {"others"}
    return [o for o in scene.objects if o.category.lower() in wanted]
