"""Outer knowledge of successful arrangements: file-backed store and retrieval.

One document per experience (`<id>.experience`) under a store directory,
with a manifest recording insertion order, so the store is human-inspectable
and diff-friendly. Retrieval scores every stored instruction against the new
one through the chat backend and returns the argmax, ties going to the
earliest insertion.
"""

import json
import os
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from filelock import FileLock

from .errors import StoreError
from .llm_client import ChatBackend, ChatRequest, parse_structured
from .scene import (
    ObjectRecord,
    Scene,
    Workspace,
    _object_from_dict,
    _object_to_dict,
    _workspace_from_dict,
    _workspace_to_dict,
    validate_scene,
)

SOURCES = ("human", "robot")

SIMILARITY_PROMPT = (
    "Give a similarity score between two instructions on a scale from 0 to 100. "
    "Reply with the integer only."
)


@dataclass(frozen=True)
class Experience:
    """An instruction paired with a validated final arrangement."""

    id: str
    instruction: str
    workspace: Workspace
    objects: Tuple[ObjectRecord, ...]
    created_at: str
    source: str

    def __post_init__(self):
        if not self.instruction.strip():
            raise ValueError("experience instruction must be nonempty")
        if self.source not in SOURCES:
            raise ValueError(f"unknown experience source {self.source!r}")
        validate_scene(Scene(self.workspace, self.objects))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "workspace": _workspace_to_dict(self.workspace),
            "objects": [_object_to_dict(o) for o in self.objects],
            "created_at": self.created_at,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Experience":
        return cls(
            id=str(doc["id"]),
            instruction=str(doc["instruction"]),
            workspace=_workspace_from_dict(doc["workspace"]),
            objects=tuple(_object_from_dict(o) for o in doc["objects"]),
            created_at=str(doc["created_at"]),
            source=str(doc["source"]),
        )


def _write_durable(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class Store:
    """Directory-backed ordered collection of experiences."""

    MANIFEST = "manifest.json"

    def __init__(self, directory):
        self.directory = Path(directory)
        self._lock = FileLock(str(self.directory / ".store.lock"))
        self._order: List[str] = []
        self._by_id: Dict[str, Experience] = {}
        self._load()

    def _load(self) -> None:
        manifest_path = self.directory / self.MANIFEST
        if not manifest_path.exists():
            raise StoreError(f"no store manifest at {manifest_path}")
        try:
            manifest = json.loads(manifest_path.read_text("utf-8"))
            order = list(manifest["order"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise StoreError(f"corrupt store manifest at {manifest_path}: {exc}") from exc
        seen = set()
        for exp_id in order:
            if exp_id in seen:
                raise StoreError(f"duplicate experience id {exp_id!r} in manifest")
            seen.add(exp_id)
            path = self.directory / f"{exp_id}.experience"
            if not path.exists():
                raise StoreError(f"manifest names {exp_id!r} but {path} is missing")
            try:
                exp = Experience.from_dict(json.loads(path.read_text("utf-8")))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise StoreError(f"corrupt experience file {path}: {exc}") from exc
            if exp.id != exp_id:
                raise StoreError(f"experience file {path} carries mismatched id {exp.id!r}")
            self._order.append(exp_id)
            self._by_id[exp_id] = exp

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self):
        return (self._by_id[i] for i in self._order)

    @property
    def experiences(self) -> List[Experience]:
        return [self._by_id[i] for i in self._order]

    def get(self, exp_id: str) -> Experience:
        return self._by_id[exp_id]

    def insertion_index(self, exp_id: str) -> int:
        return self._order.index(exp_id)

    @classmethod
    def create(cls, directory) -> "Store":
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = directory / cls.MANIFEST
        if not manifest.exists():
            _write_durable(manifest, json.dumps({"order": []}, indent=2).encode("utf-8"))
        return cls(directory)

    def add(
        self,
        instruction: str,
        objects: Sequence[ObjectRecord],
        workspace: Workspace,
        source: str = "human",
    ) -> Experience:
        """Append a new experience; it is on disk before this returns."""
        exp = Experience(
            id=f"exp-{uuid.uuid4().hex[:12]}",
            instruction=instruction,
            workspace=workspace,
            objects=tuple(objects),
            created_at=datetime.now(timezone.utc).isoformat(),
            source=source,
        )
        with self._lock:
            _write_durable(
                self.directory / f"{exp.id}.experience",
                (json.dumps(exp.to_dict(), indent=2) + "\n").encode("utf-8"),
            )
            self._order.append(exp.id)
            self._by_id[exp.id] = exp
            _write_durable(
                self.directory / self.MANIFEST,
                json.dumps({"order": self._order}, indent=2).encode("utf-8"),
            )
        return exp


def add_experience(
    store: Store,
    instruction: str,
    objects: Sequence[ObjectRecord],
    workspace: Workspace,
    source: str = "human",
) -> Experience:
    return store.add(instruction, objects, workspace, source)


def bundled_seed_dir() -> Path:
    """Directory holding the packaged seed arrangements."""
    return Path(str(resources.files("rearrange").joinpath("data/seed")))


def seed_store(path) -> Store:
    """Open the store at `path`, populating it from the bundled seeds when empty."""
    path = Path(path)
    manifest = path / Store.MANIFEST
    if not manifest.exists():
        seed_dir = bundled_seed_dir()
        if not (seed_dir / Store.MANIFEST).exists():
            raise StoreError(f"bundled seed directory {seed_dir} is missing its manifest")
        path.mkdir(parents=True, exist_ok=True)
        for entry in sorted(seed_dir.iterdir()):
            if entry.suffix == ".experience" or entry.name == Store.MANIFEST:
                (path / entry.name).write_bytes(entry.read_bytes())
    return Store(path)


def score_similarity(new_instruction: str, past_instruction: str, llm: ChatBackend) -> int:
    """Backend-judged similarity of two instructions, clamped to [0, 100]."""
    if not new_instruction.strip() or not past_instruction.strip():
        raise ValueError("both instructions must be nonempty")
    request = ChatRequest(
        messages=(
            ("system", "You rate how similar two tabletop instructions are."),
            (
                "user",
                f"{SIMILARITY_PROMPT}\n\nINSTRUCTION_A: {new_instruction}\nINSTRUCTION_B: {past_instruction}",
            ),
        ),
        tag="similarity",
    )
    reply = llm.complete(request)
    score = parse_structured(reply, "int")
    return max(0, min(100, score))


def retrieve_reference(
    store: Store, instruction: str, llm: ChatBackend
) -> Tuple[Experience, Dict[str, int]]:
    """The argmax-scored experience plus the full score map for auditing."""
    if len(store) == 0:
        raise StoreError("cannot retrieve a reference from an empty store")
    scores: Dict[str, int] = {}
    best: Optional[Experience] = None
    best_score = -1
    for exp in store:
        score = score_similarity(instruction, exp.instruction, llm)
        scores[exp.id] = score
        if score > best_score:
            best, best_score = exp, score
    return best, scores
