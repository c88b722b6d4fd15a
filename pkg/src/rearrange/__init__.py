"""Language-conditioned tabletop rearrangement with experience retrieval."""

from .geometry import Calibration, OrientedBox, Point2, corners, grasp_yaw, min_gap, overlaps, pixel_to_world
from .scene import ObjectRecord, Placement, Scene, Workspace, apply_move, load_scene, relevant_objects, save_scene
from .experience_store import Experience, Store, add_experience, retrieve_reference, score_similarity, seed_store
from .grounding import ScriptedEmbedder, assign_categories, cosine_similarity, extract_relevant_objects
from .llm_client import ChatRequest, OracleChatBackend, RemoteChatBackend, ScriptedChatBackend, make_backend
from .relations import RelationSpec, RelationThresholds, check, parse_relation
from .reasoner import build_prompt, execute_instruction, plan_steps, predict_placement, run_pipeline, validate_and_repair
from .baselines import geometric_placement, random_placement
from .evaluation import BenchConfig, EvalReport, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "Calibration",
    "OrientedBox",
    "Point2",
    "corners",
    "grasp_yaw",
    "min_gap",
    "overlaps",
    "pixel_to_world",
    "ObjectRecord",
    "Placement",
    "Scene",
    "Workspace",
    "apply_move",
    "load_scene",
    "relevant_objects",
    "save_scene",
    "Experience",
    "Store",
    "add_experience",
    "retrieve_reference",
    "score_similarity",
    "seed_store",
    "ScriptedEmbedder",
    "assign_categories",
    "cosine_similarity",
    "extract_relevant_objects",
    "ChatRequest",
    "OracleChatBackend",
    "RemoteChatBackend",
    "ScriptedChatBackend",
    "make_backend",
    "RelationSpec",
    "RelationThresholds",
    "check",
    "parse_relation",
    "build_prompt",
    "execute_instruction",
    "plan_steps",
    "predict_placement",
    "run_pipeline",
    "validate_and_repair",
    "geometric_placement",
    "random_placement",
    "BenchConfig",
    "EvalReport",
    "run_benchmark",
]
