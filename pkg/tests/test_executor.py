import math

import pytest

from rearrange.errors import SceneValidationError
from rearrange.executor import LIFT_HEIGHT_M, log_entry, make_pick_plan, run_plan
from rearrange.geometry import Point2, world_to_pixel
from rearrange.scene import Placement, apply_move

from .conftest import make_scene, record


def sample_scene():
    return make_scene(
        record("bar_0", 150, 240, 120, 40, category="bar"),
        record("cube_0", 450, 240, 50, 50, category="cube"),
    )


class TestMakePickPlan:
    def test_grasp_fields(self):
        scene = sample_scene()
        plan = make_pick_plan(scene, Placement("bar_0", 400, 100, 0.0))
        assert plan.grasp_point == Point2(150, 240)
        # 120x40 box: jaws close across the long axis
        assert plan.grasp_yaw == pytest.approx(-math.pi / 2)

    def test_five_waypoints_lift_translate_lower(self):
        scene = sample_scene()
        plan = make_pick_plan(scene, Placement("bar_0", 400, 100, 0.0))
        names = [w.name for w in plan.waypoints]
        assert names == ["pick-hover", "pick", "lift", "place-hover", "place"]
        table = scene.workspace.calibration.table_height
        assert plan.waypoints[1].z_m == pytest.approx(table)
        assert plan.waypoints[0].z_m == pytest.approx(table + LIFT_HEIGHT_M)

    def test_endpoint_pixel_projections(self):
        scene = sample_scene()
        placement = Placement("bar_0", 400, 100, 0.0)
        plan = make_pick_plan(scene, placement)
        calib = scene.workspace.calibration
        first = world_to_pixel(plan.waypoints[0].x_m, plan.waypoints[0].y_m, calib)
        last = world_to_pixel(plan.waypoints[-1].x_m, plan.waypoints[-1].y_m, calib)
        assert (first.x, first.y) == (pytest.approx(150), pytest.approx(240))
        assert (last.x, last.y) == (pytest.approx(400), pytest.approx(100))

    def test_degenerate_plan_for_identity_move(self):
        scene = sample_scene()
        plan = make_pick_plan(scene, Placement("bar_0", 150, 240, 0.0))
        assert plan.waypoints[0].x_m == plan.waypoints[-2].x_m
        assert plan.waypoints[1].y_m == plan.waypoints[-1].y_m

    def test_unknown_or_immovable(self):
        scene = make_scene(record("rock_0", 100, 100, 30, 30, movable=False))
        with pytest.raises(SceneValidationError):
            make_pick_plan(scene, Placement("ghost", 10, 10, 0.0))
        with pytest.raises(SceneValidationError):
            make_pick_plan(scene, Placement("rock_0", 10, 10, 0.0))


class TestRunPlan:
    def test_equivalent_to_apply_move(self):
        scene = sample_scene()
        placement = Placement("bar_0", 400, 100, 0.3)
        plan = make_pick_plan(scene, placement)
        assert run_plan(scene, plan, placement) == apply_move(scene, "bar_0", placement)

    def test_colliding_plan_leaves_scene_unchanged(self):
        scene = sample_scene()
        placement = Placement("bar_0", 450, 240, 0.0)  # onto the cube
        plan = make_pick_plan(scene, placement)
        with pytest.raises(SceneValidationError):
            run_plan(scene, plan, placement)
        assert scene.get("bar_0").box.cx == 150

    def test_mismatched_plan_and_placement(self):
        scene = sample_scene()
        plan = make_pick_plan(scene, Placement("bar_0", 400, 100, 0.0))
        with pytest.raises(ValueError):
            run_plan(scene, plan, Placement("cube_0", 400, 100, 0.0))

    def test_disjoint_moves_commute(self):
        scene = sample_scene()
        p1 = Placement("bar_0", 150, 100, 0.0)
        p2 = Placement("cube_0", 450, 400, 0.0)
        one = run_plan(scene, make_pick_plan(scene, p1), p1)
        one_then_two = run_plan(one, make_pick_plan(one, p2), p2)
        two = run_plan(scene, make_pick_plan(scene, p2), p2)
        two_then_one = run_plan(two, make_pick_plan(two, p1), p1)
        assert one_then_two == two_then_one


class TestLogEntry:
    def test_schema(self):
        scene = sample_scene()
        placement = Placement("bar_0", 400, 100, 0.0, repaired=True)
        plan = make_pick_plan(scene, placement)
        entry = log_entry(2, scene, plan, placement)
        assert set(entry) == {"step", "object", "from", "to", "waypoints", "repaired"}
        assert entry["step"] == 2
        assert entry["from"] == {"x": 150.0, "y": 240.0, "rotation": 0.0}
        assert entry["to"] == {"x": 400.0, "y": 100.0, "rotation": 0.0}
        assert entry["repaired"] is True
        assert len(entry["waypoints"]) == 5
