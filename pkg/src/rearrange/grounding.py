"""Semantic grounding: relevant-category extraction and embedding-based category assignment.

Real deployments would plug in a vision-language encoder here; the scripted
embedder stands in with deterministic hash-seeded unit vectors so grounding
stays testable without model weights.
"""

import hashlib
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Protocol, Sequence

import numpy as np
import requests

from .errors import BackendError, StructuredReplyError
from .llm_client import ChatBackend, ChatRequest, parse_structured
from .scene import ObjectRecord

EMBED_DIM = 64

OBJECT_EXTRACTION_PROMPT = (
    "List the objects that are directly involved in the interaction described "
    "in the instruction. Reply with a JSON list of lowercase category names, "
    'ending with "others" for everything not involved.'
)


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple
    norm: float

    def __post_init__(self):
        if len(self.values) < 2:
            raise ValueError("embedding dimension must be >= 2")
        if self.norm <= 0:
            raise ValueError("embedding must have at least one nonzero component")

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def make_embedding(values: Sequence[float]) -> EmbeddingVector:
    arr = np.asarray(list(values), dtype=np.float64)
    return EmbeddingVector(tuple(arr.tolist()), float(np.linalg.norm(arr)))


class Embedder(Protocol):
    def embed_text(self, text: str) -> EmbeddingVector: ...

    def embed_object(self, obj: ObjectRecord) -> EmbeddingVector: ...


def _stable_hash64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big")


class ScriptedEmbedder:
    """Deterministic embedder: a unit vector per string from a counter-based RNG.

    The RNG key is a stable 64-bit hash of the lowercase string, so the same
    text maps to the same vector on every run and platform. Object embeddings
    derive from the object's category string, optionally perturbed by
    `noise` (amplitude 0 by default) keyed on the object id.
    """

    def __init__(self, dim: int = EMBED_DIM, noise: float = 0.0):
        self.dim = dim
        self.noise = noise

    def _unit_vector(self, key_text: str) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(key=_stable_hash64(key_text.lower())))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def embed_text(self, text: str) -> EmbeddingVector:
        return make_embedding(self._unit_vector(text))

    def embed_object(self, obj: ObjectRecord) -> EmbeddingVector:
        v = self._unit_vector(obj.category)
        if self.noise > 0:
            v = v + self.noise * self._unit_vector(f"object-noise:{obj.id}")
            v = v / np.linalg.norm(v)
        return make_embedding(v)


ENV_EMBED_URL = "REARRANGE_EMBED_URL"


class RemoteEmbedder:
    """Embedder backed by an HTTP endpoint: {"input": [texts]} -> {"embeddings": [[...]]}."""

    def __init__(self, url: str, timeout: float = 30.0, session=None):
        self.url = url
        self.timeout = timeout
        self._session = session or requests

    def _embed_batch(self, texts: List[str]) -> List[EmbeddingVector]:
        try:
            resp = self._session.post(self.url, json={"input": texts}, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"embedding endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"embedding endpoint returned {resp.status_code}: {resp.text[:200]}")
        body = resp.json()
        return [make_embedding(vec) for vec in body["embeddings"]]

    def embed_text(self, text: str) -> EmbeddingVector:
        return self._embed_batch([text])[0]

    def embed_object(self, obj: ObjectRecord) -> EmbeddingVector:
        return self._embed_batch([obj.category])[0]


def make_embedder(name: str, embed_url: Optional[str] = None) -> Embedder:
    """Construct an embedder by configuration name: scripted | remote."""
    if name == "scripted":
        return ScriptedEmbedder()
    if name == "remote":
        url = embed_url or os.environ.get(ENV_EMBED_URL, "")
        if not url:
            raise BackendError(f"remote embedder requires an endpoint URL ({ENV_EMBED_URL})")
        return RemoteEmbedder(url)
    raise ValueError(f"unknown embedder {name!r}")


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """(u.v)/(|u||v|); symmetric and invariant to positive rescaling."""
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    if u.norm == 0 or v.norm == 0:
        raise ValueError("cosine similarity of a zero vector is undefined")
    return float(np.dot(u.as_array(), v.as_array()) / (u.norm * v.norm))


def assign_categories(
    object_embeddings: Dict[str, EmbeddingVector],
    category_embeddings: Dict[str, EmbeddingVector],
) -> Dict[str, str]:
    """Assign each object the argmax-similarity category; ties go to the earlier category."""
    if not category_embeddings:
        raise ValueError("category set must be nonempty")
    names = list(category_embeddings)
    assignment = {}
    for obj_id, obj_vec in object_embeddings.items():
        best_name, best_score = None, -np.inf
        for name in names:
            score = cosine_similarity(obj_vec, category_embeddings[name])
            if score > best_score:
                best_name, best_score = name, score
        assignment[obj_id] = best_name
    return assignment


def extract_relevant_objects(instruction: str, llm: ChatBackend) -> List[str]:
    """Ask the backend which categories the instruction manipulates.

    The reply list is lowercased and deduplicated, and always ends with a
    single "others" entry for the uninvolved objects.
    """
    if not instruction.strip():
        raise ValueError("instruction must be nonempty")
    request = ChatRequest(
        messages=(
            ("system", "You identify which object categories a tabletop instruction manipulates."),
            ("user", f"{OBJECT_EXTRACTION_PROMPT}\n\nINSTRUCTION: {instruction}"),
        ),
        tag="object_extraction",
    )
    reply = llm.complete(request)
    try:
        raw = parse_structured(reply, "string_list")
    except StructuredReplyError as exc:
        raise StructuredReplyError(
            f"object extraction reply had no parseable list: {exc}", text=reply
        ) from exc
    categories = []
    for name in raw:
        clean = re.sub(r"\s+", " ", str(name).strip().lower())
        if clean and clean != "others" and clean not in categories:
            categories.append(clean)
    categories.append("others")
    return categories


def ground_scene(
    scene_objects: Sequence[ObjectRecord],
    categories: Sequence[str],
    embedder: Embedder,
) -> Dict[str, str]:
    """Map object ids to extracted categories via embedding similarity."""
    if not categories:
        return {}
    object_embeddings = {o.id: embedder.embed_object(o) for o in scene_objects}
    category_embeddings = {c: embedder.embed_text(c) for c in categories}
    return assign_categories(object_embeddings, category_embeddings)
