"""Chat-completion backends and robust structured-output parsing.

Three interchangeable backends implement the same `complete` contract: a
remote HTTP client speaking the de-facto chat-completions wire shape, a
scripted deterministic stand-in for offline tests, and a geometric oracle
that solves placement prompts analytically. The scripted and oracle
backends are pure functions of the request.
"""

import hashlib
import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import requests

from .errors import BackendError, StructuredReplyError
from .instructions import find_categories, jaccard_score, split_steps

ROLES = ("system", "user", "assistant")
TAGS = ("object_extraction", "similarity", "placement", "step_planning")

TRAILER_MARKER = "SCENE-DATA:"

ENV_API_KEY = "REARRANGE_API_KEY"
ENV_BASE_URL = "REARRANGE_BASE_URL"
ENV_MODEL = "REARRANGE_MODEL"


@dataclass(frozen=True)
class ChatRequest:
    messages: Tuple[Tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 512
    tag: str = "placement"

    def __post_init__(self):
        if not self.messages:
            raise ValueError("request must have at least one message")
        for role, _ in self.messages:
            if role not in ROLES:
                raise ValueError(f"unknown message role {role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.tag not in TAGS:
            raise ValueError(f"unknown request tag {self.tag!r}")

    def text(self) -> str:
        return "\n".join(content for _, content in self.messages)


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


def request_fingerprint(request: ChatRequest) -> str:
    """Stable hash of (tag, concatenated message contents)."""
    h = hashlib.blake2b(digest_size=16)
    h.update(request.tag.encode("utf-8"))
    for _, content in request.messages:
        h.update(b"\x00")
        h.update(content.encode("utf-8"))
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Structured-output parsing
# ---------------------------------------------------------------------------


def parse_structured(text: str, expected: str):
    """Extract the first well-formed candidate of the expected kind.

    Tolerant of surrounding prose and code fences. Raises
    StructuredReplyError (carrying the full text) when nothing matches.
    """
    if expected == "int":
        m = re.search(r"[-+]?\d+", text)
        if m is None:
            raise StructuredReplyError("no integer found in reply", text=text)
        return int(m.group())
    if expected == "string_list":
        return _parse_string_list(text)
    if expected == "placement_record":
        records = parse_placements(text)
        if not records:
            raise StructuredReplyError("no placement record found in reply", text=text)
        return records[0]
    raise ValueError(f"unknown expected kind {expected!r}")


def _parse_string_list(text: str) -> List[str]:
    m = re.search(r"\[[^\[\]]*\]", text, re.DOTALL)
    if m is None:
        raise StructuredReplyError("no bracketed list found in reply", text=text)
    snippet = m.group()
    try:
        value = json.loads(snippet)
        if isinstance(value, list):
            return [str(v) for v in value]
    except json.JSONDecodeError:
        pass
    items = [part.strip().strip("'\"") for part in snippet[1:-1].split(",")]
    return [it for it in items if it]


def _iter_json_objects(text: str):
    depth, start = 0, None
    in_string, escape = False, False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0 and start is not None:
                yield text[start : i + 1]
                start = None


def parse_placements(text: str) -> List[dict]:
    """All brace-delimited placement records (numeric x, y; optional rotation)."""
    records = []
    for snippet in _iter_json_objects(text):
        try:
            doc = json.loads(snippet)
        except json.JSONDecodeError:
            continue
        if not isinstance(doc, dict):
            continue
        x, y = doc.get("x"), doc.get("y")
        if not (isinstance(x, (int, float)) and isinstance(y, (int, float))):
            continue
        rotation = doc.get("rotation")
        if rotation is not None and not isinstance(rotation, (int, float)):
            continue
        if not all(math.isfinite(v) for v in (x, y) if isinstance(v, (int, float))):
            continue
        record = {
            "x": float(x),
            "y": float(y),
            "rotation": None if rotation is None else float(rotation),
            "stacked_on": doc.get("stacked_on"),
            "object_id": doc.get("object_id", doc.get("id")),
        }
        records.append(record)
    return records


def render_placement(record: dict) -> str:
    """Canonical writer for one placement record; parse_placements inverts it."""
    doc = {}
    if record.get("object_id") is not None:
        doc["object_id"] = record["object_id"]
    doc["x"] = record["x"]
    doc["y"] = record["y"]
    if record.get("rotation") is not None:
        doc["rotation"] = record["rotation"]
    if record.get("stacked_on") is not None:
        doc["stacked_on"] = record["stacked_on"]
    return json.dumps(doc)


def render_placements(records: Sequence[dict]) -> str:
    return "[" + ", ".join(render_placement(r) for r in records) + "]"


# ---------------------------------------------------------------------------
# Scene trailer embedded in placement prompts
# ---------------------------------------------------------------------------


def render_scene_trailer(payload: dict) -> str:
    """One-line machine-readable trailer appended to placement prompts."""
    return TRAILER_MARKER + " " + json.dumps(payload, sort_keys=True)


def parse_scene_trailer(text: str) -> dict:
    for line in text.splitlines():
        line = line.strip()
        if line.startswith(TRAILER_MARKER):
            return json.loads(line[len(TRAILER_MARKER) :])
    raise StructuredReplyError("prompt carries no scene trailer", text=text)


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


def _find_labelled(text: str, label: str) -> Optional[str]:
    m = re.search(rf"^{re.escape(label)}:\s*(.*)$", text, re.MULTILINE)
    return m.group(1).strip() if m else None


class ScriptedChatBackend:
    """Deterministic rule-based replies, with optional canned overrides.

    Canned entries are matched top-down; an entry fires when its tag matches
    and either its fingerprint equals the request fingerprint or every
    `contains` substring occurs in the prompt. Without a canned hit, a
    per-tag built-in rule answers: lexicon scan for object extraction,
    token-Jaccard for similarity scoring, clause splitting for step
    planning, and echoing current poses for placement.
    """

    def __init__(self, canned: Optional[List[dict]] = None):
        self.canned = list(canned or [])

    @classmethod
    def from_canned_file(cls, path: str) -> "ScriptedChatBackend":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def _canned_reply(self, request: ChatRequest) -> Optional[str]:
        prompt = request.text()
        fp = request_fingerprint(request)
        for entry in self.canned:
            if entry.get("tag") not in (None, request.tag):
                continue
            if "fingerprint" in entry:
                if entry["fingerprint"] == fp:
                    return entry["reply"]
                continue
            needles = entry.get("contains", [])
            if all(n in prompt for n in needles):  # an unconstrained entry matches everything
                return entry["reply"]
        return None

    def complete(self, request: ChatRequest) -> str:
        reply = self._canned_reply(request)
        if reply is not None:
            return reply
        prompt = request.text()
        if request.tag == "object_extraction":
            instruction = _find_labelled(prompt, "INSTRUCTION") or prompt
            return json.dumps(find_categories(instruction) + ["others"])
        if request.tag == "similarity":
            a = _find_labelled(prompt, "INSTRUCTION_A")
            b = _find_labelled(prompt, "INSTRUCTION_B")
            if a is None or b is None:
                raise BackendError("similarity prompt is missing INSTRUCTION_A/INSTRUCTION_B lines")
            return str(jaccard_score(a, b))
        if request.tag == "step_planning":
            instruction = _find_labelled(prompt, "INSTRUCTION")
            if instruction is None:
                raise BackendError("step-planning prompt is missing an INSTRUCTION line")
            return json.dumps(split_steps(instruction))
        if request.tag == "placement":
            return self._placement_reply(request)
        raise BackendError(f"scripted backend has no rule for tag {request.tag!r}")

    def _placement_reply(self, request: ChatRequest) -> str:
        trailer = parse_scene_trailer(request.text())
        movable = set(trailer.get("movable_ids", []))
        records = []
        for obj in trailer["objects"]:
            if obj["id"] in movable:
                records.append(
                    {
                        "object_id": obj["id"],
                        "x": obj["box"]["cx"],
                        "y": obj["box"]["cy"],
                        "rotation": obj["box"]["theta"],
                        "stacked_on": obj.get("stacked_on"),
                    }
                )
        return render_placements(records)


class OracleChatBackend(ScriptedChatBackend):
    """Scripted backend whose placement replies come from the geometric relation solver.

    Doubles as the test oracle and the offline demo brain: it reconstructs
    the scene from the prompt trailer and computes satisfying poses
    analytically instead of guessing.
    """

    def _placement_reply(self, request: ChatRequest) -> str:
        from .relations import solve_step  # local import: relations -> scene -> geometry only

        trailer = parse_scene_trailer(request.text())
        records = solve_step(trailer)
        return render_placements(records)


class RemoteChatBackend:
    """HTTP chat-completions client with retry/backoff on transport failures."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        retries: int = 2,
        timeout: float = 60.0,
        backoff_base: float = 0.5,
        post: Optional[Callable] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.retries = retries
        self.timeout = timeout
        self.backoff_base = backoff_base
        self._post = post or requests.post

    @classmethod
    def from_env(cls, **kwargs) -> "RemoteChatBackend":
        base_url = os.environ.get(ENV_BASE_URL, "")
        if not base_url:
            raise BackendError(f"remote backend requires {ENV_BASE_URL}")
        return cls(
            base_url=base_url,
            model=kwargs.pop("model", None) or os.environ.get(ENV_MODEL, "gpt-4"),
            api_key=os.environ.get(ENV_API_KEY, ""),
            **kwargs,
        )

    def complete(self, request: ChatRequest) -> str:
        url = f"{self.base_url}/v1/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": role, "content": content} for role, content in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_exc = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._post(url, json=body, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (KeyError, IndexError, TypeError, ValueError) as exc:
                    raise BackendError(f"malformed completion response: {exc}") from exc
            if resp.status_code in (429,) or resp.status_code >= 500:
                last_exc = BackendError(f"server returned {resp.status_code}")
                continue
            raise BackendError(f"completion request failed with status {resp.status_code}: {resp.text[:200]}")
        raise BackendError(f"transport failure after {self.retries} retries: {last_exc}")


@dataclass
class CapturingBackend:
    """Wrapper that records every request (and reply) passing through it."""

    inner: ChatBackend
    requests: List[ChatRequest] = field(default_factory=list)
    replies: List[str] = field(default_factory=list)

    def complete(self, request: ChatRequest) -> str:
        self.requests.append(request)
        reply = self.inner.complete(request)
        self.replies.append(reply)
        return reply


def make_backend(name: str, canned: Optional[List[dict]] = None, **kwargs) -> ChatBackend:
    """Construct a backend by configuration name: scripted | oracle | remote."""
    if name == "scripted":
        return ScriptedChatBackend(canned)
    if name == "oracle":
        return OracleChatBackend(canned)
    if name == "remote":
        return RemoteChatBackend.from_env(**kwargs)
    raise ValueError(f"unknown backend {name!r}")
