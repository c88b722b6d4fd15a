"""HTTP control plane for the human-in-the-loop console.

The paper-style loop executes immediately; here every instruction first
yields a pending proposal (steps, placements, reference) that a human can
apply or reject — the preview/accept split is the success judgment the
original study delegated to its raters. Accepted arrangements are stored
as new experiences for future retrieval.
"""

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import baselines
from .assets import fixture_names, load_fixture, load_scene_arg
from .errors import PipelineError, RearrangeError
from .evaluation import METHODS
from .experience_store import Store, seed_store
from .geometry import corners
from .grounding import extract_relevant_objects, make_embedder
from .llm_client import make_backend
from .reasoner import run_pipeline, transitions_to_doc
from .relations import RelationThresholds
from .scene import Scene, apply_moves, relevant_objects, scene_to_dict

PROPOSAL_MODES = ("with_reference", "without_reference", "random", "geometric")


@dataclass
class ServiceConfig:
    backend: str = "oracle"
    embedder: str = "scripted"
    mode: str = "with_reference"
    scene: str = "scene1"
    store_dir: Optional[str] = None
    gap_px: float = baselines.DEFAULT_GAP_PX
    seed: int = 0
    thresholds: RelationThresholds = field(default_factory=RelationThresholds)


class InstructionBody(BaseModel):
    text: str
    mode: Optional[str] = None


class AcceptBody(BaseModel):
    instruction: str


class ResetBody(BaseModel):
    scene_fixture: str


class ConfigPatch(BaseModel):
    backend: Optional[str] = None
    embedder: Optional[str] = None
    mode: Optional[str] = None
    gap_px: Optional[float] = None
    seed: Optional[int] = None


class Session:
    """Single-operator session: one scene, at most one pending proposal."""

    def __init__(self, config: ServiceConfig, store: Store, scene: Scene):
        self.config = config
        self.store = store
        self.scene = scene
        self.proposal: Optional[dict] = None
        self.final_scene: Optional[Scene] = None
        self.llm = make_backend(config.backend)
        self.lock = threading.Lock()

    def rebuild_backend(self):
        self.llm = make_backend(self.config.backend)


def _scene_payload(scene: Scene) -> dict:
    doc = scene_to_dict(scene)
    doc["corners"] = {
        o.id: [[p.x, p.y] for p in corners(o.box)] for o in scene.objects
    }
    return doc


def _propose(session: Session, text: str, mode: str) -> dict:
    cfg = session.config
    if mode in ("random", "geometric"):
        categories = extract_relevant_objects(text, session.llm)
        ids = [o.id for o in relevant_objects(session.scene, categories) if o.movable]
        if mode == "random":
            placements = baselines.random_placement(session.scene, ids, cfg.seed)
        else:
            placements = baselines.geometric_placement(session.scene, ids, cfg.gap_px)
        final = apply_moves(session.scene, placements)
        proposal = {
            "instruction": text,
            "mode": mode,
            "steps": [text],
            "placements": [
                [
                    {
                        "object_id": p.object_id,
                        "x": p.x,
                        "y": p.y,
                        "rotation": p.rotation,
                        "stacked_on": p.stacked_on,
                        "repaired": p.repaired,
                    }
                    for p in placements
                ]
            ],
            "reference": None,
            "log": {"steps": [{"index": 0, "instruction": text, "moves": [], "scene_after": scene_to_dict(final)}]},
        }
        session.final_scene = final
        session.proposal = proposal
        return proposal
    run = run_pipeline(
        session.scene,
        text,
        session.store,
        session.llm,
        mode=mode,
        embedder=make_embedder(cfg.embedder),
        thresholds=cfg.thresholds,
    )
    reference = None
    if run.reference is not None:
        reference = {
            "id": run.reference.id,
            "instruction": run.reference.instruction,
            "score": run.scores.get(run.reference.id),
        }
    proposal = {
        "instruction": text,
        "mode": mode,
        "steps": [r.instruction for r in run.results],
        "placements": [
            [
                {
                    "object_id": p.object_id,
                    "x": p.x,
                    "y": p.y,
                    "rotation": p.rotation,
                    "stacked_on": p.stacked_on,
                    "repaired": p.repaired,
                }
                for p in r.placements
            ]
            for r in run.results
        ],
        "reference": reference,
        "log": transitions_to_doc(run.results),
    }
    session.final_scene = run.results[-1].scene if run.results else session.scene
    session.proposal = proposal
    return proposal


def create_app(config: Optional[ServiceConfig] = None, console_dir: Optional[str] = None) -> FastAPI:
    config = config or ServiceConfig()
    store = seed_store(config.store_dir) if config.store_dir else Store.create(Path.home() / ".rearrange" / "store")
    scene = load_scene_arg(config.scene)
    session = Session(config, store, scene)

    app = FastAPI(title="rearrange control service")
    app.state.session = session
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed body", "detail": exc.errors()})

    @app.exception_handler(RearrangeError)
    async def pipeline_failure(request: Request, exc: RearrangeError):
        stage = exc.stage if isinstance(exc, PipelineError) else type(exc).__name__
        return JSONResponse(status_code=422, content={"stage": stage, "message": str(exc)})

    @app.get("/scene")
    def get_scene():
        return _scene_payload(session.scene)

    @app.post("/instruction")
    def post_instruction(body: InstructionBody):
        mode = body.mode or session.config.mode
        if mode not in PROPOSAL_MODES:
            return JSONResponse(status_code=400, content={"error": f"unknown mode {mode!r}"})
        if not body.text.strip():
            return JSONResponse(status_code=400, content={"error": "instruction must be nonempty"})
        with session.lock:
            return _propose(session, body.text, mode)

    @app.post("/apply")
    def post_apply():
        with session.lock:
            if session.proposal is None:
                return JSONResponse(status_code=409, content={"error": "no pending proposal"})
            log = session.proposal["log"]
            session.scene = session.final_scene
            session.proposal = None
            session.final_scene = None
            return {"log": log, "scene": _scene_payload(session.scene)}

    @app.post("/reject")
    def post_reject():
        with session.lock:
            session.proposal = None
            session.final_scene = None
            return {"ok": True}

    @app.post("/experience/accept")
    def post_accept(body: AcceptBody):
        if not body.instruction.strip():
            return JSONResponse(status_code=400, content={"error": "instruction must be nonempty"})
        with session.lock:
            exp = session.store.add(
                body.instruction, session.scene.objects, session.scene.workspace, source="human"
            )
            return {"id": exp.id}

    @app.get("/experiences")
    def get_experiences():
        return {
            "experiences": [
                {
                    "id": e.id,
                    "instruction": e.instruction,
                    "created_at": e.created_at,
                    "source": e.source,
                }
                for e in session.store
            ]
        }

    @app.post("/reset")
    def post_reset(body: ResetBody):
        if body.scene_fixture not in fixture_names():
            return JSONResponse(status_code=400, content={"error": f"unknown fixture {body.scene_fixture!r}"})
        with session.lock:
            session.scene = load_fixture(body.scene_fixture)
            session.proposal = None
            session.final_scene = None
            return _scene_payload(session.scene)

    @app.get("/config")
    def get_config():
        cfg = session.config
        return {
            "backend": cfg.backend,
            "embedder": cfg.embedder,
            "mode": cfg.mode,
            "gap_px": cfg.gap_px,
            "seed": cfg.seed,
            "modes": list(PROPOSAL_MODES),
            "methods": list(METHODS),
            "fixtures": fixture_names(),
        }

    @app.patch("/config")
    def patch_config(body: ConfigPatch):
        with session.lock:
            if body.backend is not None:
                if body.backend not in ("scripted", "oracle", "remote"):
                    return JSONResponse(status_code=400, content={"error": f"unknown backend {body.backend!r}"})
                session.config.backend = body.backend
                session.rebuild_backend()
            if body.embedder is not None:
                if body.embedder not in ("scripted", "remote"):
                    return JSONResponse(status_code=400, content={"error": f"unknown embedder {body.embedder!r}"})
                session.config.embedder = body.embedder
            if body.mode is not None:
                if body.mode not in PROPOSAL_MODES:
                    return JSONResponse(status_code=400, content={"error": f"unknown mode {body.mode!r}"})
                session.config.mode = body.mode
            if body.gap_px is not None:
                session.config.gap_px = body.gap_px
            if body.seed is not None:
                session.config.seed = body.seed
            return get_config()

    if console_dir and Path(console_dir).is_dir():
        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")

    return app


def serve(config: ServiceConfig, listen: str = "127.0.0.1:7788", console_dir: Optional[str] = None):
    import uvicorn

    host, _, port = listen.partition(":")
    app = create_app(config, console_dir=console_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or "7788"), log_level="info")
