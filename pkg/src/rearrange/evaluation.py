"""Automated geometric benchmark over the three bundled scenarios.

Replaces the original user study: instead of human ratings, each of the 15
scripted instructions is checked with the relation predicates, per step for
sequential orders. The report mirrors the study table's shape: one row per
method, one column per scenario plus the mean.
"""

import io
from dataclasses import dataclass, field
from typing import List, Optional, Tuple


from . import baselines
from .assets import load_fixture
from .errors import RearrangeError
from .experience_store import Store, bundled_seed_dir
from .grounding import ScriptedEmbedder, extract_relevant_objects
from .llm_client import ChatBackend, make_backend
from .relations import RelationThresholds, check, parse_relation
from .scene import Scene, apply_moves, relevant_objects

METHODS = ("random", "geometric", "ours_no_ref", "ours_with_ref")

SCENARIOS: Tuple[Tuple[str, str, Tuple[str, ...]], ...] = (
    (
        "single_object",
        "scene1",
        (
            "put the eggplant on the right of the plate",
            "put the eggplant on the left of the plate",
            "put the eggplant in front of the plate",
            "put the eggplant behind the plate",
            "put the eggplant far away from the plate",
        ),
    ),
    (
        "multiple_objects",
        "scene2",
        (
            "put the potatoes on the plate",
            "put the potatoes beside the plate",
            "put one potato to the left of the plate and the other to the right",
            "put the potatoes far away from the plate",
            "put the potatoes together",
        ),
    ),
    (
        "sequential_order",
        "scene3",
        (
            "put the eggplant on the plate, then beside the plate",
            "put eggplant beside the plate, then beside the carrot",
            "put the eggplant beside the potato, then put the eggplant on the plate",
            "put the eggplant beside the carrot, then far away from the carrot",
            "put the eggplant on the right of the potato, then on the left of the pineapple",
        ),
    ),
)


@dataclass
class BenchConfig:
    methods: Tuple[str, ...] = METHODS
    backend: str = "oracle"
    seed: int = 0
    gap_px: float = baselines.DEFAULT_GAP_PX
    thresholds: RelationThresholds = field(default_factory=RelationThresholds)
    store_dir: Optional[str] = None
    chat_backend: Optional[ChatBackend] = None

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r} (have {', '.join(METHODS)})")


@dataclass(frozen=True)
class CellResult:
    method: str
    scenario: str
    instruction: str
    satisfied: bool
    relation_details: Tuple[dict, ...]
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "scenario": self.scenario,
            "instruction": self.instruction,
            "satisfied": self.satisfied,
            "relations": list(self.relation_details),
            "error": self.error,
        }


@dataclass(frozen=True)
class EvalReport:
    cells: Tuple[CellResult, ...]

    def methods(self) -> List[str]:
        seen = []
        for c in self.cells:
            if c.method not in seen:
                seen.append(c.method)
        return seen

    def scenario_rate(self, method: str, scenario: str) -> float:
        hits = [c.satisfied for c in self.cells if c.method == method and c.scenario == scenario]
        return sum(hits) / len(hits) if hits else 0.0

    def success_rate(self, method: str) -> float:
        hits = [c.satisfied for c in self.cells if c.method == method]
        return sum(hits) / len(hits) if hits else 0.0

    def to_doc(self) -> dict:
        return {
            "scenarios": [name for name, _, _ in SCENARIOS],
            "rows": [
                {
                    "method": m,
                    **{name: self.scenario_rate(m, name) for name, _, _ in SCENARIOS},
                    "mean": self.success_rate(m),
                }
                for m in self.methods()
            ],
            "cells": [c.to_dict() for c in self.cells],
        }

    def to_table(self) -> str:
        names = [name for name, _, _ in SCENARIOS]
        headers = ["method"] + names + ["mean"]
        rows = [
            [m] + [f"{self.scenario_rate(m, n):.2f}" for n in names] + [f"{self.success_rate(m):.2f}"]
            for m in self.methods()
        ]
        widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
        out = io.StringIO()
        out.write("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip() + "\n")
        out.write("  ".join("-" * w for w in widths) + "\n")
        for r in rows:
            out.write("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() + "\n")
        return out.getvalue()

    def to_csv(self) -> str:
        names = [name for name, _, _ in SCENARIOS]
        lines = ["method," + ",".join(names) + ",mean"]
        for m in self.methods():
            lines.append(
                m + "," + ",".join(f"{self.scenario_rate(m, n):.4f}" for n in names) + f",{self.success_rate(m):.4f}"
            )
        return "\n".join(lines) + "\n"


def _baseline_scenes(
    method: str, scene: Scene, instruction: str, llm: ChatBackend, seed, gap_px: float, n_steps: int
) -> List[Scene]:
    categories = extract_relevant_objects(instruction, llm)
    ids = [o.id for o in relevant_objects(scene, categories) if o.movable]
    if method == "random":
        placements = baselines.random_placement(scene, ids, seed)
    else:
        placements = baselines.geometric_placement(scene, ids, gap_px)
    final = apply_moves(scene, placements)
    return [final] * n_steps


def _pipeline_scenes(
    mode: str, scene: Scene, instruction: str, llm: ChatBackend, store, thresholds
) -> List[Scene]:
    from .reasoner import execute_instruction

    results = execute_instruction(
        scene, instruction, store, llm, mode=mode, embedder=ScriptedEmbedder(), thresholds=thresholds
    )
    return [r.scene for r in results]


def run_benchmark(config: BenchConfig) -> EvalReport:
    """Execute every scenario instruction under every configured method."""
    llm = config.chat_backend or make_backend(config.backend)
    store = None
    if "ours_with_ref" in config.methods:
        store = Store(config.store_dir) if config.store_dir else Store(bundled_seed_dir())
    cells: List[CellResult] = []
    for method in config.methods:
        for s_idx, (scenario, fixture, instr_list) in enumerate(SCENARIOS):
            for i_idx, instruction in enumerate(instr_list):
                scene = load_fixture(fixture)
                specs = parse_relation(instruction, scene)
                n_steps = max(s.step_index for s in specs) + 1
                error = None
                try:
                    if method == "random":
                        scenes = _baseline_scenes(
                            method, scene, instruction, llm, [config.seed, s_idx, i_idx], config.gap_px, n_steps
                        )
                    elif method == "geometric":
                        scenes = _baseline_scenes(
                            method, scene, instruction, llm, None, config.gap_px, n_steps
                        )
                    else:
                        mode = "with_reference" if method == "ours_with_ref" else "without_reference"
                        scenes = _pipeline_scenes(mode, scene, instruction, llm, store, config.thresholds)
                except RearrangeError as exc:
                    cells.append(
                        CellResult(method, scenario, instruction, False, (), error=str(exc))
                    )
                    continue
                details = []
                satisfied = True
                for spec in specs:
                    boundary = scenes[min(spec.step_index, len(scenes) - 1)]
                    ok = check(boundary, spec, config.thresholds)
                    satisfied = satisfied and ok
                    details.append({**spec.to_dict(), "satisfied": ok})
                cells.append(CellResult(method, scenario, instruction, satisfied, tuple(details), error))
    return EvalReport(tuple(cells))
