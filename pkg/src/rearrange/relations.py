"""Spatial relation vocabulary: parsing, geometric predicates, and analytic solving.

The predicates turn an instruction into a checkable geometric statement, in
place of collecting human ratings. Directional kinds use a dominant-axis
rule (the displacement must lean toward the named direction), proximity
kinds use boundary gap or center distance scaled by the workspace diagonal.
The solver inverts the predicates: given a relation it constructs a
collision-free pose that satisfies it, which is what the oracle backend
replies with.
"""

import math
import re
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from .errors import BackendError, RelationParseError
from .geometry import contains_point, half_extents, min_gap, overlaps
from .instructions import (
    RELATION_PHRASES,
    first_relation_span,
    singularize,
    split_steps,
    tokenize,
)
from .scene import Placement, Scene, apply_move, check_pose, scene_from_dict

KINDS = ("on", "left_of", "right_of", "in_front_of", "behind", "beside", "far_from", "together")

_ARTICLES = {"the", "a", "an"}


@dataclass(frozen=True)
class RelationThresholds:
    """Scale-relative cutoffs for the proximity predicates.

    front_axis picks the viewpoint for in_front_of/behind: "camera" means
    front is +y (toward the image bottom), "robot" flips it.
    """

    beside_frac: float = 0.12
    far_frac: float = 0.4
    front_axis: str = "camera"

    @property
    def front_sign(self) -> float:
        return 1.0 if self.front_axis == "camera" else -1.0

    def to_dict(self) -> dict:
        return {"beside_frac": self.beside_frac, "far_frac": self.far_frac, "front_axis": self.front_axis}

    @classmethod
    def from_dict(cls, doc: Optional[dict]) -> "RelationThresholds":
        return cls(**doc) if doc else cls()


@dataclass(frozen=True)
class RelationSpec:
    kind: str
    subject_ids: Tuple[str, ...]
    anchor_ids: Tuple[str, ...]
    step_index: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown relation kind {self.kind!r}")
        if not self.subject_ids:
            raise ValueError("relation needs at least one subject")
        if set(self.subject_ids) & set(self.anchor_ids):
            raise ValueError("subject and anchor must differ")
        if self.kind == "together" and self.anchor_ids:
            raise ValueError("'together' takes no anchors")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "subject_ids": list(self.subject_ids),
            "anchor_ids": list(self.anchor_ids),
            "step_index": self.step_index,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RelationSpec":
        return cls(doc["kind"], tuple(doc["subject_ids"]), tuple(doc["anchor_ids"]), doc["step_index"])


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_DISTRIBUTIVE_RE = re.compile(
    r"\bone\s+(\w+)\s+(?:to|on)\s+the\s+(left|right)\s+of\s+(?:the\s+)?(\w+)"
    r"\s+and\s+the\s+other(?:\s+one)?(?:\s+(?:to|on))?(?:\s+the)?\s+(left|right)\b",
    re.IGNORECASE,
)


def _category_objects(scene: Scene, phrase: str, force_plural: Optional[bool] = None) -> Tuple[str, List[str]]:
    words = [w for w in tokenize(phrase) if w not in _ARTICLES]
    if not words:
        raise RelationParseError(f"no object noun in {phrase!r}")
    category = singularize(" ".join(words))
    ids = [o.id for o in scene.objects if o.category.lower() == category]
    if not ids:
        raise RelationParseError(f"no scene object of category {category!r} (from {phrase!r})")
    plural = words[-1] != singularize(words[-1]) if force_plural is None else force_plural
    return category, ids if plural else ids[:1]


def parse_step_relation(clause: str, scene: Scene, step_index: int = 0) -> List[RelationSpec]:
    """Relation specs for a single-step clause."""
    m = _DISTRIBUTIVE_RE.search(clause)
    if m is not None:
        subject_cat, side_a, anchor_phrase, side_b = m.group(1), m.group(2), m.group(3), m.group(4)
        _, subject_ids = _category_objects(scene, subject_cat, force_plural=True)
        if len(subject_ids) < 2:
            raise RelationParseError(
                f"distributive clause needs two {subject_cat!r} objects, found {len(subject_ids)}"
            )
        _, anchor_ids = _category_objects(scene, anchor_phrase)
        return [
            RelationSpec(f"{side_a.lower()}_of", (subject_ids[0],), tuple(anchor_ids), step_index),
            RelationSpec(f"{side_b.lower()}_of", (subject_ids[1],), tuple(anchor_ids), step_index),
        ]

    span = first_relation_span(clause)
    if span is None:
        raise RelationParseError(f"no supported relation phrase in {clause!r}")
    phrase = span.group().lower()
    kind = dict(RELATION_PHRASES)[phrase]
    subject_text = clause[: span.start()]
    subject_text = re.sub(r"^\s*\w+\s+", "", subject_text.strip(), count=1)  # drop the verb
    _, subject_ids = _category_objects(scene, subject_text)

    if kind == "together":
        if len(subject_ids) < 2:
            raise RelationParseError(f"'together' needs a plural subject in {clause!r}")
        return [RelationSpec("together", tuple(subject_ids), (), step_index)]

    anchor_text = clause[span.end() :].strip(" ,.")
    if not anchor_text:
        raise RelationParseError(f"relation {phrase!r} is missing an anchor in {clause!r}")
    _, anchor_ids = _category_objects(scene, anchor_text)
    return [RelationSpec(kind, tuple(subject_ids), tuple(anchor_ids), step_index)]


def parse_relation(instruction: str, scene: Scene) -> List[RelationSpec]:
    """One or more RelationSpecs per step of the instruction."""
    specs = []
    for step_index, clause in enumerate(split_steps(instruction)):
        specs.extend(parse_step_relation(clause, scene, step_index))
    return specs


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------


def _pair_satisfied(scene: Scene, kind: str, subject_id: str, anchor_id: str, th: RelationThresholds) -> bool:
    s, a = scene.get(subject_id), scene.get(anchor_id)
    dx = s.box.cx - a.box.cx
    dy = s.box.cy - a.box.cy
    diag = scene.workspace.diagonal
    disjoint = not overlaps(s.box, a.box)
    if kind == "right_of":
        return dx > 0 and disjoint and abs(dy) <= abs(dx)
    if kind == "left_of":
        return dx < 0 and disjoint and abs(dy) <= abs(dx)
    if kind == "in_front_of":
        return th.front_sign * dy > 0 and disjoint and abs(dx) <= abs(dy)
    if kind == "behind":
        return th.front_sign * dy < 0 and disjoint and abs(dx) <= abs(dy)
    if kind == "on":
        return (
            contains_point(a.box, s.box.center)
            and s.box.area < a.box.area
            and s.stacked_on == a.id
        )
    if kind == "beside":
        gap = min_gap(s.box, a.box)
        return disjoint and 0 < gap <= th.beside_frac * diag
    if kind == "far_from":
        return math.hypot(dx, dy) >= th.far_frac * diag
    raise ValueError(f"unknown relation kind {kind!r}")


def check(scene: Scene, spec: RelationSpec, thresholds: Optional[RelationThresholds] = None) -> bool:
    """True iff the scene satisfies the relation for every subject/anchor pairing."""
    th = thresholds or RelationThresholds()
    if spec.kind == "together":
        ids = spec.subject_ids
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                a, b = scene.get(ids[i]).box, scene.get(ids[j]).box
                if overlaps(a, b) or min_gap(a, b) > th.beside_frac * scene.workspace.diagonal:
                    return False
        return True
    return all(
        _pair_satisfied(scene, spec.kind, s_id, a_id, th)
        for s_id in spec.subject_ids
        for a_id in spec.anchor_ids
    )


# ---------------------------------------------------------------------------
# Analytic solving (the oracle backend's placement rule)
# ---------------------------------------------------------------------------

_SIDE_OFFSETS = {
    "right_of": (1, 0),
    "left_of": (-1, 0),
    "in_front_of": (0, 1),
    "behind": (0, -1),
}

DEFAULT_MARGIN = 20.0


def _directional_pose(scene: Scene, subject_id: str, anchor_id: str, kind: str, gap: float, slide: float, th: RelationThresholds):
    s, a = scene.get(subject_id), scene.get(anchor_id)
    ux, uy = _SIDE_OFFSETS[kind]
    if kind in ("in_front_of", "behind"):
        uy *= th.front_sign
    shx, shy = half_extents(s.box)
    ahx, ahy = half_extents(a.box)
    if ux:
        x = a.box.cx + ux * (ahx + shx + gap)
        y = a.box.cy + slide
    else:
        x = a.box.cx + slide
        y = a.box.cy + uy * (ahy + shy + gap)
    return x, y


def _try_pose(work: Scene, subject_id: str, x: float, y: float, rotation: float, stacked_on, spec: RelationSpec, th: RelationThresholds) -> Optional[Placement]:
    obj = work.get(subject_id)
    box = obj.box.moved(x, y, rotation)
    probe = check_pose(work, subject_id, box, stacked_on)
    if not probe.ok:
        return None
    placement = Placement(subject_id, x, y, rotation, stacked_on)
    candidate = apply_move(work, subject_id, placement)
    single = replace(spec, subject_ids=(subject_id,)) if spec.kind != "together" else spec
    if spec.kind != "together" and not check(candidate, single, th):
        return None
    return placement


def _solve_directional(work: Scene, spec: RelationSpec, subject_id: str, th: RelationThresholds, margin: float) -> Optional[Placement]:
    rotation = work.get(subject_id).box.theta
    for extra in (0.0, 10.0, 20.0, 40.0):
        for slide in (0.0, 15.0, -15.0, 30.0, -30.0, 45.0, -45.0):
            for anchor_id in spec.anchor_ids:
                x, y = _directional_pose(work, subject_id, anchor_id, spec.kind, margin + extra, slide, th)
                p = _try_pose(work, subject_id, x, y, rotation, None, spec, th)
                if p is not None:
                    return p
    return None


def _solve_beside(work: Scene, spec: RelationSpec, subject_id: str, th: RelationThresholds, margin: float) -> Optional[Placement]:
    rotation = work.get(subject_id).box.theta
    for extra in (0.0, 10.0, 20.0):
        for side in ("right_of", "left_of", "behind", "in_front_of"):
            for anchor_id in spec.anchor_ids:
                x, y = _directional_pose(work, subject_id, anchor_id, side, margin + extra, 0.0, th)
                p = _try_pose(work, subject_id, x, y, rotation, None, spec, th)
                if p is not None:
                    return p
    return None


def _solve_on(work: Scene, spec: RelationSpec, th: RelationThresholds) -> List[Placement]:
    anchor = work.get(spec.anchor_ids[0])
    subjects = [work.get(sid) for sid in spec.subject_ids]
    ahx, ahy = half_extents(anchor.box)
    along_x = ahx >= ahy
    extents = [2 * half_extents(s.box)[0 if along_x else 1] for s in subjects]
    placements = []
    for pad in (5.0, 2.0, 8.0):
        step = max(extents) + pad
        offsets = [(i - (len(subjects) - 1) / 2.0) * step for i in range(len(subjects))]
        trial, scene_now = [], work
        for s, off in zip(subjects, offsets):
            x = anchor.box.cx + (off if along_x else 0.0)
            y = anchor.box.cy + (0.0 if along_x else off)
            p = _try_pose(scene_now, s.id, x, y, s.box.theta, anchor.id, spec, th)
            if p is None:
                trial = None
                break
            trial.append(p)
            scene_now = apply_move(scene_now, s.id, p)
        if trial is not None:
            placements = trial
            break
    return placements


def _far_candidates(scene: Scene, subject_id: str) -> List[Tuple[float, float]]:
    inset = scene.get(subject_id).box.half_diagonal + 2.0
    w, h = scene.workspace.width_px, scene.workspace.height_px
    xs = (inset, w / 2.0, w - inset)
    ys = (inset, h / 2.0, h - inset)
    return [(x, y) for x in xs for y in ys if not (x == w / 2.0 and y == h / 2.0)]


def _solve_far(work: Scene, spec: RelationSpec, subject_id: str, th: RelationThresholds) -> Optional[Placement]:
    s = work.get(subject_id)
    anchors = [work.get(aid) for aid in spec.anchor_ids]
    need = th.far_frac * work.workspace.diagonal
    candidates = _far_candidates(work, subject_id)
    candidates.sort(key=lambda c: -min(math.hypot(c[0] - a.box.cx, c[1] - a.box.cy) for a in anchors))
    for x, y in candidates:
        if min(math.hypot(x - a.box.cx, y - a.box.cy) for a in anchors) < need:
            continue
        p = _try_pose(work, subject_id, x, y, s.box.theta, None, spec, th)
        if p is not None:
            return p
    return None


def _solve_together(work: Scene, spec: RelationSpec, th: RelationThresholds) -> List[Placement]:
    subjects = [work.get(sid) for sid in spec.subject_ids]
    widths = [2 * half_extents(s.box)[0] for s in subjects]
    heights = [2 * half_extents(s.box)[1] for s in subjects]
    gap = 10.0
    total = sum(widths) + gap * (len(subjects) - 1)
    cx0 = sum(s.box.cx for s in subjects) / len(subjects)
    cy0 = sum(s.box.cy for s in subjects) / len(subjects)
    w, h = work.workspace.width_px, work.workspace.height_px
    anchor_shifts = [(0, 0), (0, 60), (0, -60), (60, 0), (-60, 0), (0, 120), (0, -120), (120, 0), (-120, 0)]
    for sx, sy in anchor_shifts:
        cx = min(max(cx0 + sx, total / 2 + 2), w - total / 2 - 2)
        cy = min(max(cy0 + sy, max(heights) / 2 + 2), h - max(heights) / 2 - 2)
        left = cx - total / 2
        trial, scene_now = [], work
        for s, width in zip(subjects, widths):
            x = left + width / 2
            left += width + gap
            p = _try_pose(scene_now, s.id, x, cy, s.box.theta, None, spec, th)
            if p is None:
                trial = None
                break
            trial.append(p)
            scene_now = apply_move(scene_now, s.id, p)
        if trial is not None and check(scene_now, spec, th):
            return trial
    return []


def solve_relations(
    scene: Scene,
    specs: Sequence[RelationSpec],
    thresholds: Optional[RelationThresholds] = None,
    margin: float = DEFAULT_MARGIN,
) -> List[Placement]:
    """Collision-free poses satisfying every relation of one step, applied in order."""
    th = thresholds or RelationThresholds()
    work = scene
    placements: List[Placement] = []
    for spec in specs:
        if spec.kind == "on":
            batch = _solve_on(work, spec, th)
            if len(batch) != len(spec.subject_ids):
                raise BackendError(f"no satisfying stack for {spec.kind} {spec.subject_ids}")
            for p in batch:
                placements.append(p)
                work = apply_move(work, p.object_id, p)
            continue
        if spec.kind == "together":
            batch = _solve_together(work, spec, th)
            if len(batch) != len(spec.subject_ids):
                raise BackendError(f"no satisfying cluster for {spec.subject_ids}")
            for p in batch:
                placements.append(p)
                work = apply_move(work, p.object_id, p)
            continue
        for subject_id in spec.subject_ids:
            if spec.kind in _SIDE_OFFSETS:
                p = _solve_directional(work, spec, subject_id, th, margin)
            elif spec.kind == "beside":
                p = _solve_beside(work, spec, subject_id, th, margin)
            elif spec.kind == "far_from":
                p = _solve_far(work, spec, subject_id, th)
            else:
                p = None
            if p is None:
                raise BackendError(f"no satisfying pose for {spec.kind}({subject_id})")
            placements.append(p)
            work = apply_move(work, subject_id, p)
    return placements


def solve_step(trailer: dict) -> List[dict]:
    """Oracle entry point: solve the step described by a placement-prompt trailer."""
    scene = scene_from_dict({"workspace": trailer["workspace"], "objects": trailer["objects"]})
    th = RelationThresholds.from_dict(trailer.get("thresholds"))
    raw = trailer.get("relations")
    if raw:
        specs = [RelationSpec.from_dict(doc) for doc in raw]
    else:
        instruction = trailer.get("instruction", "")
        try:
            specs = parse_step_relation(instruction, scene)
        except RelationParseError as exc:
            raise BackendError(f"oracle cannot solve unstructured step {instruction!r}: {exc}") from exc
    placements = solve_relations(scene, specs, th)
    return [
        {
            "object_id": p.object_id,
            "x": p.x,
            "y": p.y,
            "rotation": p.rotation,
            "stacked_on": p.stacked_on,
        }
        for p in placements
    ]
