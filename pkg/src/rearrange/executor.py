"""Simulated pick-and-place: grasp poses and auditable waypoint trajectories.

No inverse kinematics or motion planning here: the simulator's contract is
the scene-state transition plus a descriptive 5-waypoint record. Collision
is checked at the final pose only.
"""

from dataclasses import dataclass
from typing import Tuple

from .errors import SceneValidationError
from .geometry import Point2, grasp_yaw, pixel_to_world
from .scene import Placement, Scene, apply_move

LIFT_HEIGHT_M = 0.15

WAYPOINT_NAMES = ("pick-hover", "pick", "lift", "place-hover", "place")


@dataclass(frozen=True)
class Waypoint:
    name: str
    x_m: float
    y_m: float
    z_m: float
    yaw: float

    def to_dict(self) -> dict:
        return {"name": self.name, "x_m": self.x_m, "y_m": self.y_m, "z_m": self.z_m, "yaw": self.yaw}


@dataclass(frozen=True)
class PickPlan:
    object_id: str
    grasp_point: Point2
    grasp_yaw: float
    waypoints: Tuple[Waypoint, ...]


def make_pick_plan(scene: Scene, placement: Placement) -> PickPlan:
    """Lift-translate-lower trajectory from the object's pose to the placement."""
    try:
        obj = scene.get(placement.object_id)
    except KeyError:
        raise SceneValidationError(f"unknown object id {placement.object_id!r}", [placement.object_id]) from None
    if not obj.movable:
        raise SceneValidationError(f"object {placement.object_id!r} is not movable", [placement.object_id])
    calib = scene.workspace.calibration
    yaw = grasp_yaw(obj.box)
    px, py, pz = pixel_to_world(obj.centroid, calib)
    tx, ty, tz = pixel_to_world(Point2(placement.x, placement.y), calib)
    lift = pz + LIFT_HEIGHT_M
    waypoints = (
        Waypoint("pick-hover", px, py, lift, yaw),
        Waypoint("pick", px, py, pz, yaw),
        Waypoint("lift", px, py, lift, yaw),
        Waypoint("place-hover", tx, ty, tz + LIFT_HEIGHT_M, yaw),
        Waypoint("place", tx, ty, tz, yaw),
    )
    return PickPlan(placement.object_id, obj.centroid, yaw, waypoints)


def run_plan(scene: Scene, plan: PickPlan, placement: Placement) -> Scene:
    """Execute the plan: equivalent to apply_move, atomic on failure."""
    if plan.object_id != placement.object_id:
        raise ValueError(f"plan is for {plan.object_id!r}, placement for {placement.object_id!r}")
    return apply_move(scene, placement.object_id, placement)


def log_entry(step: int, scene_before: Scene, plan: PickPlan, placement: Placement) -> dict:
    """Transition-log record for one executed move."""
    obj = scene_before.get(placement.object_id)
    return {
        "step": step,
        "object": placement.object_id,
        "from": {"x": obj.box.cx, "y": obj.box.cy, "rotation": obj.box.theta},
        "to": {"x": placement.x, "y": placement.y, "rotation": placement.rotation},
        "waypoints": [w.to_dict() for w in plan.waypoints],
        "repaired": placement.repaired,
    }
