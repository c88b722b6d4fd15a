"""The core pipeline: prompt building, placement prediction, collision repair, sequencing.

Per instruction the pipeline grounds the relevant objects, retrieves one
reference arrangement (in with_reference mode), splits sequential orders
into single-relation steps, and per step asks the backend for target poses,
repairs collisions, and advances the scene through the simulated executor.
"""

import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

from . import executor, grounding
from .errors import PipelineError, RepairExhaustedError, StructuredReplyError
from .experience_store import Experience, Store, retrieve_reference
from .geometry import HALF_PI, normalize_half_pi
from .llm_client import (
    ChatBackend,
    ChatRequest,
    parse_placements,
    parse_structured,
    render_scene_trailer,
)
from .relations import RelationParseError as _RelParseError
from .relations import RelationThresholds, parse_step_relation
from .scene import ObjectRecord, Placement, Scene, check_pose, scene_to_dict

PROMPT_VERSION = "placement.v1"

# Repair schedule: pure rotations at the requested center first (the
# rotate-on-collision policy), then translated centers outward.
REPAIR_ROTATION_DELTAS = (0.0, math.pi / 4, -math.pi / 4, HALF_PI)
REPAIR_RADII = (10.0, 20.0, 40.0)
_S = math.sqrt(0.5)
REPAIR_DIRECTIONS = ((1, 0), (0, -1), (-1, 0), (0, 1), (_S, -_S), (-_S, -_S), (-_S, _S), (_S, _S))


def _load_preamble() -> str:
    return resources.files("rearrange").joinpath(f"prompts/{PROMPT_VERSION}.txt").read_text("utf-8")


@dataclass(frozen=True)
class StepPlan:
    steps: Tuple[str, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a plan needs at least one step")


@dataclass(frozen=True)
class PromptBundle:
    """The placement prompt, kept in blocks so tests can diff them."""

    system: str
    scene_block: str
    instruction_block: str
    reference_block: Optional[str]
    directive: str
    trailer: str

    def user_text(self) -> str:
        blocks = [self.scene_block, self.instruction_block]
        if self.reference_block is not None:
            blocks.append(self.reference_block)
        blocks.extend([self.directive, self.trailer])
        return "\n\n".join(blocks)

    def messages(self) -> Tuple[Tuple[str, str], ...]:
        return (("system", self.system), ("user", self.user_text()))

    def request(self) -> ChatRequest:
        return ChatRequest(messages=self.messages(), tag="placement")


def _fmt(v: float) -> str:
    return f"{v:.1f}"


def _object_line(obj: ObjectRecord) -> str:
    line = (
        f"- id={obj.id} category={obj.category} "
        f"center=({_fmt(obj.box.cx)}, {_fmt(obj.box.cy)}) "
        f"size=({_fmt(obj.box.w)} x {_fmt(obj.box.h)}) "
        f"rotation={_fmt(obj.box.theta)} "
        f"movable={'yes' if obj.movable else 'no'}"
    )
    if obj.stacked_on is not None:
        line += f" stacked_on={obj.stacked_on}"
    return line


def build_prompt(
    scene: Scene,
    instruction: str,
    reference: Optional[Experience] = None,
    movable_ids: Optional[Sequence[str]] = None,
    thresholds: Optional[RelationThresholds] = None,
    step_index: int = 0,
) -> PromptBundle:
    """Deterministic placement prompt; the reference block is present iff a reference is given."""
    th = thresholds or RelationThresholds()
    if movable_ids is None:
        movable_ids = [o.id for o in scene.objects if o.movable]
    ws = scene.workspace
    scene_lines = [f"## Current scene (workspace {ws.width_px} x {ws.height_px} px)"]
    scene_lines.extend(_object_line(o) for o in scene.objects)
    instruction_block = f"## Instruction\n{instruction}"
    reference_block = None
    if reference is not None:
        ref_lines = [
            "## Reference arrangement",
            f'A similar task was solved before. Its instruction: "{reference.instruction}"',
            "Final object layout of that arrangement:",
        ]
        ref_lines.extend(_object_line(o) for o in reference.objects)
        reference_block = "\n".join(ref_lines)
    directive = (
        "## Output format\n"
        "Reply with one JSON object per object you move, e.g. "
        '{"object_id": "...", "x": 100.0, "y": 200.0, "rotation": 0.0, "stacked_on": null}. '
        "Only move the objects the instruction involves; coordinates are pixels."
    )
    try:
        relations = [s.to_dict() for s in parse_step_relation(instruction, scene, step_index)]
    except _RelParseError:
        relations = None
    payload = {
        "instruction": instruction,
        "step_index": step_index,
        "movable_ids": list(movable_ids),
        "relations": relations,
        "thresholds": th.to_dict(),
        **scene_to_dict(scene),
    }
    return PromptBundle(
        system=_load_preamble(),
        scene_block="\n".join(scene_lines),
        instruction_block=instruction_block,
        reference_block=reference_block,
        directive=directive,
        trailer=render_scene_trailer(payload),
    )


def plan_steps(instruction: str, llm: ChatBackend) -> StepPlan:
    """Split a sequential instruction into ordered single-relation steps."""
    if not instruction.strip():
        raise ValueError("instruction must be nonempty")
    request = ChatRequest(
        messages=(
            ("system", "You split tabletop instructions into ordered, self-contained steps."),
            (
                "user",
                "Split the instruction into its ordered steps. Each step must name the object "
                "it moves. A single-step instruction yields a one-element list. Reply with a "
                f"JSON list of step strings.\n\nINSTRUCTION: {instruction}",
            ),
        ),
        tag="step_planning",
    )
    reply = llm.complete(request)
    steps = [s.strip() for s in parse_structured(reply, "string_list") if s.strip()]
    if not steps:
        raise StructuredReplyError("step planner returned an empty list", text=reply)
    return StepPlan(tuple(steps))


def _reply_to_placements(
    scene: Scene,
    reply: str,
    relevant_movable: Sequence[str],
) -> List[Placement]:
    records = parse_placements(reply)
    if not records:
        raise StructuredReplyError("placement reply had no parseable records", text=reply)
    relevant = set(relevant_movable)
    placements = []
    for rec in records:
        object_id = rec["object_id"]
        if object_id is None:
            if len(relevant_movable) == 1:
                object_id = relevant_movable[0]
            else:
                raise StructuredReplyError("placement record lacks an object_id", text=reply)
        if not scene.has(object_id):
            raise StructuredReplyError(f"placement references unknown id {object_id!r}", text=reply)
        if object_id not in relevant:
            continue  # known object outside the step's scope: ignore
        obj = scene.get(object_id)
        rotation = obj.box.theta if rec["rotation"] is None else rec["rotation"]
        placements.append(Placement(object_id, rec["x"], rec["y"], rotation, rec["stacked_on"]))
    if not placements:
        raise StructuredReplyError("no placement addressed a relevant movable object", text=reply)
    return placements


def _out_of_bounds(scene: Scene, placements: Sequence[Placement]) -> List[Placement]:
    bad = []
    for p in placements:
        box = scene.get(p.object_id).box.moved(p.x, p.y, p.rotation)
        if not check_pose(scene, p.object_id, box, p.stacked_on).in_bounds:
            bad.append(p)
    return bad


def predict_placement(
    scene: Scene,
    step_instruction: str,
    reference: Optional[Experience],
    llm: ChatBackend,
    relevant_ids: Optional[Sequence[str]] = None,
    thresholds: Optional[RelationThresholds] = None,
    step_index: int = 0,
) -> List[Placement]:
    """Ask the backend for target poses for one step; one placement per moved object.

    Replies that leave the workspace get exactly one corrective re-prompt.
    """
    if relevant_ids is None:
        relevant_ids = [o.id for o in scene.objects]
    relevant_movable = [oid for oid in relevant_ids if scene.get(oid).movable]
    bundle = build_prompt(scene, step_instruction, reference, relevant_movable, thresholds, step_index)
    reply = llm.complete(bundle.request())
    placements = _reply_to_placements(scene, reply, relevant_movable)
    oob = _out_of_bounds(scene, placements)
    if oob:
        ws = scene.workspace
        complaint = "; ".join(
            f"{p.object_id} at ({_fmt(p.x)}, {_fmt(p.y)}) leaves the {ws.width_px} x {ws.height_px} px workspace"
            for p in oob
        )
        retry = ChatRequest(
            messages=bundle.messages()
            + (("assistant", reply), ("user", f"Invalid: {complaint}. Reply again with poses fully inside the workspace.")),
            tag="placement",
        )
        reply = llm.complete(retry)
        placements = _reply_to_placements(scene, reply, relevant_movable)
        oob = _out_of_bounds(scene, placements)
        if oob:
            raise StructuredReplyError(
                f"backend kept placing {[p.object_id for p in oob]} out of bounds", text=reply
            )
    return placements


def validate_and_repair(scene: Scene, placement: Placement) -> Placement:
    """Return the placement unchanged if its pose is legal, else the first legal
    pose in the fixed repair schedule (rotations at the requested center, then
    translated centers outward)."""
    obj = scene.get(placement.object_id)
    original = check_pose(
        scene, placement.object_id, obj.box.moved(placement.x, placement.y, placement.rotation), placement.stacked_on
    )
    if original.ok:
        return replace(placement, repaired=False)

    def candidates():
        for delta in REPAIR_ROTATION_DELTAS:
            yield placement.x, placement.y, placement.rotation + delta
        for radius in REPAIR_RADII:
            for dx, dy in REPAIR_DIRECTIONS:
                for delta in REPAIR_ROTATION_DELTAS:
                    yield placement.x + radius * dx, placement.y + radius * dy, placement.rotation + delta

    for x, y, rot in candidates():
        box = obj.box.moved(x, y, rot)
        if check_pose(scene, placement.object_id, box, placement.stacked_on).ok:
            return Placement(placement.object_id, x, y, normalize_half_pi(rot), placement.stacked_on, repaired=True)
    raise RepairExhaustedError(
        f"no collision-free pose for {placement.object_id!r} near ({_fmt(placement.x)}, {_fmt(placement.y)})",
        blockers=original.blockers,
    )


@dataclass(frozen=True)
class StepResult:
    """One executed step: the instruction clause, applied placements, and the scene after."""

    index: int
    instruction: str
    placements: Tuple[Placement, ...]
    scene: Scene
    log_entries: Tuple[dict, ...]


@dataclass(frozen=True)
class PipelineRun:
    """Full pipeline outcome: per-step results plus the retrieval audit trail."""

    results: Tuple[StepResult, ...]
    categories: Tuple[str, ...]
    relevant_ids: Tuple[str, ...]
    reference: Optional[Experience]
    scores: Dict[str, int]


def run_pipeline(
    scene: Scene,
    instruction: str,
    store: Optional[Store],
    llm: ChatBackend,
    mode: str = "with_reference",
    embedder: Optional[grounding.Embedder] = None,
    thresholds: Optional[RelationThresholds] = None,
) -> PipelineRun:
    """Run the full pipeline on one instruction, keeping the retrieval trail."""
    if mode not in ("with_reference", "without_reference"):
        raise ValueError(f"unknown mode {mode!r}")
    if not instruction.strip():
        raise ValueError("instruction must be nonempty")
    results: List[StepResult] = []

    def fail(stage, exc):
        raise PipelineError(stage, str(exc), log=results) from exc

    categories: List[str] = []
    try:
        categories = grounding.extract_relevant_objects(instruction, llm)
    except Exception as exc:
        fail("object_extraction", exc)
    embedder = embedder or grounding.ScriptedEmbedder()
    assignment = grounding.ground_scene(scene.objects, categories, embedder)
    relevant_ids = [o.id for o in scene.objects if assignment.get(o.id) not in (None, "others")]

    reference, scores = None, {}
    if mode == "with_reference" and store is not None and len(store) > 0:
        try:
            reference, scores = retrieve_reference(store, instruction, llm)
        except Exception as exc:
            fail("retrieval", exc)

    try:
        plan = plan_steps(instruction, llm)
    except Exception as exc:
        fail("step_planning", exc)

    current = scene
    for index, step in enumerate(plan.steps):
        try:
            placements = predict_placement(current, step, reference, llm, relevant_ids, thresholds, index)
        except Exception as exc:
            fail("placement", exc)
        applied: List[Placement] = []
        entries: List[dict] = []
        for p in placements:
            try:
                repaired = validate_and_repair(current, p)
                pick = executor.make_pick_plan(current, repaired)
                moved = executor.run_plan(current, pick, repaired)
            except Exception as exc:
                fail("execution", exc)
            entries.append(executor.log_entry(index, current, pick, repaired))
            applied.append(repaired)
            current = moved
        results.append(StepResult(index, step, tuple(applied), current, tuple(entries)))
    return PipelineRun(tuple(results), tuple(categories), tuple(relevant_ids), reference, dict(scores))


def execute_instruction(
    scene: Scene,
    instruction: str,
    store: Optional[Store],
    llm: ChatBackend,
    mode: str = "with_reference",
    embedder: Optional[grounding.Embedder] = None,
    thresholds: Optional[RelationThresholds] = None,
) -> List[StepResult]:
    """Run the full pipeline on one instruction, returning the transition log."""
    return list(
        run_pipeline(scene, instruction, store, llm, mode, embedder, thresholds).results
    )


def transitions_to_doc(results: Sequence[StepResult]) -> dict:
    """Serializable transition log: steps, per-object moves, and final scene."""
    return {
        "steps": [
            {
                "index": r.index,
                "instruction": r.instruction,
                "moves": list(r.log_entries),
                "scene_after": scene_to_dict(r.scene),
            }
            for r in results
        ],
    }
