import json
import math

import pytest

from rearrange.errors import PipelineError, RepairExhaustedError, StructuredReplyError
from rearrange.experience_store import Store, bundled_seed_dir
from rearrange.llm_client import CapturingBackend, OracleChatBackend, ScriptedChatBackend
from rearrange.reasoner import (
    build_prompt,
    execute_instruction,
    plan_steps,
    predict_placement,
    run_pipeline,
    transitions_to_doc,
    validate_and_repair,
)
from rearrange.relations import check, parse_relation
from rearrange.scene import Placement, apply_move, validate_scene

from .conftest import make_scene, record
from .oracles import raster_overlap


def scene1():
    return make_scene(
        record("plate_0", 320, 240, 120, 120),
        record("eggplant_0", 150, 240, 60, 30),
    )


def scene3():
    return make_scene(
        record("plate_0", 320, 240, 120, 120),
        record("eggplant_0", 150, 240, 60, 30),
        record("carrot_0", 320, 100, 90, 25),
        record("potato_0", 480, 150, 70, 45),
        record("pineapple_0", 480, 330, 90, 60),
    )


def seed_store_handle():
    return Store(bundled_seed_dir())


class TestBuildPrompt:
    def test_deterministic(self):
        a = build_prompt(scene1(), "put the eggplant behind the plate")
        b = build_prompt(scene1(), "put the eggplant behind the plate")
        assert a == b
        assert a.user_text() == b.user_text()

    def test_one_line_per_object(self):
        bundle = build_prompt(scene3(), "put the eggplant on the plate")
        lines = [l for l in bundle.scene_block.splitlines() if l.startswith("- id=")]
        assert len(lines) == 5
        for obj_id in ("plate_0", "eggplant_0", "carrot_0", "potato_0", "pineapple_0"):
            assert sum(f"id={obj_id} " in l for l in lines) == 1

    def test_numeric_fields_one_decimal(self):
        bundle = build_prompt(scene1(), "x of eggplant beside plate")
        assert "center=(320.0, 240.0)" in bundle.scene_block
        assert "size=(120.0 x 120.0)" in bundle.scene_block

    def test_reference_block_presence(self):
        store = seed_store_handle()
        ref = store.experiences[0]
        with_ref = build_prompt(scene1(), "put the eggplant on the plate", reference=ref)
        without = build_prompt(scene1(), "put the eggplant on the plate", reference=None)
        assert with_ref.reference_block is not None
        assert without.reference_block is None
        assert ref.instruction in with_ref.reference_block
        # everything else identical
        assert with_ref.system == without.system
        assert with_ref.scene_block == without.scene_block
        assert with_ref.instruction_block == without.instruction_block
        assert with_ref.directive == without.directive
        assert with_ref.trailer == without.trailer

    def test_trailer_carries_objects_and_relations(self):
        bundle = build_prompt(scene1(), "put the eggplant on the right of the plate")
        payload = json.loads(bundle.trailer.split("SCENE-DATA: ", 1)[1])
        assert [o["id"] for o in payload["objects"]] == ["plate_0", "eggplant_0"]
        assert payload["relations"][0]["kind"] == "right_of"
        free_form = build_prompt(scene1(), "make it pretty somehow")
        payload2 = json.loads(free_form.trailer.split("SCENE-DATA: ", 1)[1])
        assert payload2["relations"] is None


class TestPlanSteps:
    def test_sequential_split(self):
        plan = plan_steps("put the eggplant on the plate, then beside the plate", ScriptedChatBackend())
        assert plan.steps == ("put the eggplant on the plate", "put the eggplant beside the plate")

    def test_single_step(self):
        plan = plan_steps("put the eggplant behind the plate", ScriptedChatBackend())
        assert plan.steps == ("put the eggplant behind the plate",)

    def test_subject_reattached(self):
        plan = plan_steps("put the eggplant beside the carrot, then far away from the carrot", ScriptedChatBackend())
        assert plan.steps == (
            "put the eggplant beside the carrot",
            "put the eggplant far away from the carrot",
        )

    def test_continuation_with_own_verb_untouched(self):
        plan = plan_steps(
            "put the eggplant beside the potato, then put the eggplant on the plate", ScriptedChatBackend()
        )
        assert plan.steps == (
            "put the eggplant beside the potato",
            "put the eggplant on the plate",
        )


class _SequenceBackend:
    """Returns scripted replies in order; for exercising re-prompt paths."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self.replies.pop(0)


class TestPredictPlacement:
    def test_oracle_right_of_pose(self):
        placements = predict_placement(
            scene1(),
            "put the eggplant on the right of the plate",
            None,
            OracleChatBackend(),
            relevant_ids=["plate_0", "eggplant_0"],
        )
        assert len(placements) == 1
        p = placements[0]
        assert (p.object_id, p.x, p.y) == ("eggplant_0", 430.0, 240.0)
        assert abs(p.y - 240.0) <= p.x - 320.0  # right-of dominant-axis bound

    def test_identity_echo_is_identity_move(self):
        placements = predict_placement(
            scene1(), "hold position", None, ScriptedChatBackend(), relevant_ids=["eggplant_0"]
        )
        assert placements == [Placement("eggplant_0", 150.0, 240.0, 0.0)]

    def test_missing_rotation_defaults_to_current(self):
        scene = make_scene(record("carrot_0", 100, 100, 90, 25, theta=0.7))
        backend = _SequenceBackend(['{"object_id": "carrot_0", "x": 300.0, "y": 300.0}'])
        (p,) = predict_placement(scene, "move the carrot", None, backend, relevant_ids=["carrot_0"])
        assert p.rotation == pytest.approx(0.7)

    def test_unknown_id_rejected(self):
        backend = _SequenceBackend(['{"object_id": "ghost", "x": 10, "y": 10}'])
        with pytest.raises(StructuredReplyError, match="unknown id"):
            predict_placement(scene1(), "x", None, backend, relevant_ids=["eggplant_0"])

    def test_out_of_bounds_gets_one_reprompt(self):
        backend = _SequenceBackend(
            [
                '{"object_id": "eggplant_0", "x": 5000.0, "y": 240.0}',
                '{"object_id": "eggplant_0", "x": 500.0, "y": 240.0}',
            ]
        )
        (p,) = predict_placement(scene1(), "x", None, backend, relevant_ids=["eggplant_0"])
        assert p.x == 500.0
        assert len(backend.requests) == 2
        followup = backend.requests[1]
        assert followup.messages[-1][0] == "user"
        assert "workspace" in followup.messages[-1][1]

    def test_persistent_out_of_bounds_fails(self):
        backend = _SequenceBackend(
            [
                '{"object_id": "eggplant_0", "x": 5000.0, "y": 240.0}',
                '{"object_id": "eggplant_0", "x": -900.0, "y": 240.0}',
            ]
        )
        with pytest.raises(StructuredReplyError, match="out of bounds"):
            predict_placement(scene1(), "x", None, backend, relevant_ids=["eggplant_0"])


def corridor_scene():
    """Two long immovable walls with a gap between them, plus a long thin bar."""
    return make_scene(
        record("wall_a", 320, 160, 400, 20, movable=False, category="wall"),
        record("wall_b", 320, 320, 400, 20, movable=False, category="wall"),
        record("bar_0", 320, 420, 300, 20, category="bar"),
    )


class TestValidateAndRepair:
    def test_collision_free_input_returned_unchanged(self):
        scene = scene1()
        p = Placement("eggplant_0", 500.0, 240.0, 0.0)
        out = validate_and_repair(scene, p)
        assert (out.x, out.y, out.rotation) == (500.0, 240.0, 0.0)
        assert out.repaired is False

    def test_corridor_rotation_repair_keeps_center(self):
        scene = corridor_scene()
        requested = Placement("bar_0", 320.0, 240.0, math.pi / 2)
        out = validate_and_repair(scene, requested)
        assert out.repaired is True
        assert (out.x, out.y) == (320.0, 240.0)
        # quarter-turn away from the requested rotation, i.e. horizontal
        assert out.rotation == pytest.approx(0.0, abs=1e-9)
        final_box = scene.get("bar_0").box.moved(out.x, out.y, out.rotation)
        for wall in ("wall_a", "wall_b"):
            assert not raster_overlap(final_box, scene.get(wall).box, step=0.05)

    def test_translation_fallback_changes_center(self):
        scene = make_scene(
            record("block_0", 320, 240, 60, 60, movable=False, category="block"),
            record("cube_0", 100, 100, 15, 15, category="cube"),
        )
        # a square on the block's center collides at every rotation; only translation frees it
        p = Placement("cube_0", 320.0, 240.0, 0.0)
        out = validate_and_repair(scene, p)
        assert out.repaired is True
        assert (out.x, out.y) != (320.0, 240.0)
        final = apply_move(scene, "cube_0", Placement("cube_0", out.x, out.y, out.rotation))
        validate_scene(final)

    def test_exhaustion_lists_blockers(self):
        scene = make_scene(
            record("block_0", 100, 100, 120, 120, movable=False, category="block"),
            record("cube_0", 20, 20, 30, 30, category="cube"),
            width=200,
            height=200,
        )
        with pytest.raises(RepairExhaustedError) as err:
            validate_and_repair(scene, Placement("cube_0", 100.0, 100.0, 0.0))
        assert err.value.blockers == ["block_0"]


class TestExecuteInstruction:
    def test_single_step_satisfies_relation(self):
        scene = scene1()
        instruction = "put the eggplant on the right of the plate"
        results = execute_instruction(scene, instruction, seed_store_handle(), OracleChatBackend())
        assert len(results) == 1
        specs = parse_relation(instruction, scene)
        assert all(check(results[-1].scene, s) for s in specs)
        validate_scene(results[-1].scene)

    def test_two_step_instruction_checks_each_boundary(self):
        scene = scene3()
        instruction = "put the eggplant on the plate, then beside the plate"
        results = execute_instruction(scene, instruction, seed_store_handle(), OracleChatBackend())
        assert len(results) == 2
        specs = parse_relation(instruction, scene)
        by_step = {s.step_index: s for s in specs}
        assert check(results[0].scene, by_step[0])
        assert check(results[1].scene, by_step[1])
        for r in results:
            validate_scene(r.scene)

    def test_original_scene_never_mutated(self):
        scene = scene1()
        snapshot = json.dumps(scene.object_ids()) + str(scene.get("eggplant_0").box)
        execute_instruction(scene, "put the eggplant behind the plate", None, OracleChatBackend(), mode="without_reference")
        assert json.dumps(scene.object_ids()) + str(scene.get("eggplant_0").box) == snapshot

    def test_deterministic_transition_log(self):
        instruction = "put the eggplant beside the carrot, then far away from the carrot"
        a = execute_instruction(scene3(), instruction, seed_store_handle(), OracleChatBackend())
        b = execute_instruction(scene3(), instruction, seed_store_handle(), OracleChatBackend())
        assert json.dumps(transitions_to_doc(a), sort_keys=True) == json.dumps(transitions_to_doc(b), sort_keys=True)

    def test_pipeline_error_carries_partial_log(self):
        backend = _SequenceBackend(['["eggplant", "plate", "others"]', "not a number at all"])
        with pytest.raises(PipelineError) as err:
            execute_instruction(scene1(), "put the eggplant beside the plate", seed_store_handle(), backend)
        assert err.value.stage == "retrieval"
        assert err.value.log == []

    def test_log_entries_have_waypoints(self):
        results = execute_instruction(
            scene1(), "put the eggplant on the left of the plate", None, OracleChatBackend(), mode="without_reference"
        )
        entry = results[0].log_entries[0]
        assert entry["object"] == "eggplant_0"
        assert [w["name"] for w in entry["waypoints"]] == ["pick-hover", "pick", "lift", "place-hover", "place"]
        assert entry["repaired"] is False


def _strip_reference(user_text):
    blocks = user_text.split("\n\n")
    return "\n\n".join(b for b in blocks if not b.startswith("## Reference arrangement"))


class TestAblationContract:
    def test_prompts_differ_only_in_reference_block(self):
        instruction = "put the eggplant on the right of the plate"
        with_cap = CapturingBackend(OracleChatBackend())
        without_cap = CapturingBackend(OracleChatBackend())
        execute_instruction(scene1(), instruction, seed_store_handle(), with_cap, mode="with_reference")
        execute_instruction(scene1(), instruction, seed_store_handle(), without_cap, mode="without_reference")

        with_placements = [r for r in with_cap.requests if r.tag == "placement"]
        without_placements = [r for r in without_cap.requests if r.tag == "placement"]
        assert len(with_placements) == len(without_placements) == 1
        ref_prompt = with_placements[0].messages[1][1]
        plain_prompt = without_placements[0].messages[1][1]
        assert ref_prompt != plain_prompt
        assert "## Reference arrangement" in ref_prompt
        assert "## Reference arrangement" not in plain_prompt
        assert _strip_reference(ref_prompt) == plain_prompt
        # identical control flow outside retrieval: same tag sequence
        with_tags = [r.tag for r in with_cap.requests if r.tag != "similarity"]
        without_tags = [r.tag for r in without_cap.requests if r.tag != "similarity"]
        assert with_tags == without_tags
        # retrieval happened only in with_reference mode
        assert any(r.tag == "similarity" for r in with_cap.requests)
        assert not any(r.tag == "similarity" for r in without_cap.requests)

    def test_run_pipeline_exposes_reference_audit(self):
        run = run_pipeline(
            scene1(), "put the eggplant on the right of the plate", seed_store_handle(), OracleChatBackend()
        )
        assert run.reference is not None
        assert set(run.scores) == {e.id for e in seed_store_handle()}
        assert run.scores[run.reference.id] == max(run.scores.values())
