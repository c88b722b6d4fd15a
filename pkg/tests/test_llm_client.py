import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from rearrange.errors import BackendError, StructuredReplyError
from rearrange.llm_client import (
    CapturingBackend,
    ChatRequest,
    OracleChatBackend,
    RemoteChatBackend,
    ScriptedChatBackend,
    make_backend,
    parse_placements,
    parse_scene_trailer,
    parse_structured,
    render_placement,
    render_scene_trailer,
    request_fingerprint,
)


def req(content, tag="similarity", role="user", temperature=0.0):
    return ChatRequest(messages=((role, content),), tag=tag, temperature=temperature)


class TestChatRequest:
    def test_validation(self):
        with pytest.raises(ValueError):
            ChatRequest(messages=())
        with pytest.raises(ValueError):
            ChatRequest(messages=(("narrator", "hi"),))
        with pytest.raises(ValueError):
            ChatRequest(messages=(("user", "hi"),), temperature=-1)
        with pytest.raises(ValueError):
            ChatRequest(messages=(("user", "hi"),), tag="nonsense")

    def test_fingerprint_stable(self):
        a = req("INSTRUCTION_A: x\nINSTRUCTION_B: y")
        b = req("INSTRUCTION_A: x\nINSTRUCTION_B: y")
        assert request_fingerprint(a) == request_fingerprint(b)
        assert request_fingerprint(a) != request_fingerprint(req("other"))


class TestParseStructured:
    def test_int_with_prose(self):
        assert parse_structured("Score: 85/100", "int") == 85

    def test_int_missing(self):
        with pytest.raises(StructuredReplyError) as err:
            parse_structured("no digits here", "int")
        assert err.value.text == "no digits here"

    def test_string_list(self):
        got = parse_structured('Objects: ["apple", "banana", "others"]', "string_list")
        assert got == ["apple", "banana", "others"]

    def test_string_list_in_code_fence(self):
        text = "Here you go:\n```json\n[\"cup\", \"others\"]\n```\nDone."
        assert parse_structured(text, "string_list") == ["cup", "others"]

    def test_placement_record_with_prose(self):
        got = parse_structured('I suggest {"x": 420.0, "y": 240.0, "rotation": 0.0} as the goal.', "placement_record")
        assert (got["x"], got["y"], got["rotation"]) == (420.0, 240.0, 0.0)

    def test_placement_record_missing_rotation(self):
        got = parse_structured('{"object_id": "a", "x": 1.0, "y": 2.0}', "placement_record")
        assert got["rotation"] is None
        assert got["object_id"] == "a"

    def test_placement_skips_non_numeric_candidates(self):
        text = '{"x": "not a number", "y": 2} then {"x": 5, "y": 6, "rotation": 0.1}'
        got = parse_structured(text, "placement_record")
        assert got["x"] == 5.0

    def test_multiple_records(self):
        text = 'first {"object_id": "a", "x": 1, "y": 2}, second {"object_id": "b", "x": 3, "y": 4}'
        assert [r["object_id"] for r in parse_placements(text)] == ["a", "b"]

    def test_roundtrip_fuzzed_records(self):
        rng = np.random.default_rng(83)
        for i in range(1000):
            record = {
                "object_id": f"obj_{i}",
                "x": float(np.round(rng.uniform(-1000, 1000), 6)),
                "y": float(np.round(rng.uniform(-1000, 1000), 6)),
                "rotation": None if rng.random() < 0.2 else float(np.round(rng.uniform(-1.57, 1.57), 9)),
                "stacked_on": None if rng.random() < 0.7 else f"support_{i}",
            }
            parsed = parse_structured(render_placement(record), "placement_record")
            assert parsed == record

    def test_roundtrip_int_and_list(self):
        assert parse_structured(str(-42), "int") == -42
        values = ["apple", "two words", "x_1"]
        assert parse_structured(json.dumps(values), "string_list") == values


class TestScriptedBackend:
    def test_byte_identical_replies(self):
        backend = ScriptedChatBackend()
        r = req("INSTRUCTION_A: put the apple\nINSTRUCTION_B: put the apple")
        assert backend.complete(r) == backend.complete(r) == "100"

    def test_similarity_rule(self):
        backend = ScriptedChatBackend()
        r = req("Score these.\nINSTRUCTION_A: put the apple on a plate\nINSTRUCTION_B: stack the red cube")
        assert backend.complete(r) == "11"

    def test_extraction_rule(self):
        backend = ScriptedChatBackend()
        r = req("List the objects.\n\nINSTRUCTION: put the eggplant on the plate", tag="object_extraction")
        assert json.loads(backend.complete(r)) == ["eggplant", "plate", "others"]

    def test_step_planning_rule(self):
        backend = ScriptedChatBackend()
        r = req("INSTRUCTION: put the eggplant on the plate, then beside the plate", tag="step_planning")
        assert json.loads(backend.complete(r)) == [
            "put the eggplant on the plate",
            "put the eggplant beside the plate",
        ]

    def test_canned_reply_by_contains(self):
        backend = ScriptedChatBackend(canned=[{"tag": "similarity", "contains": ["magic"], "reply": "7"}])
        assert backend.complete(req("this has magic inside")) == "7"

    def test_canned_reply_by_fingerprint(self):
        target = req("exact prompt")
        backend = ScriptedChatBackend(
            canned=[{"tag": "similarity", "fingerprint": request_fingerprint(target), "reply": "canned!"}]
        )
        assert backend.complete(target) == "canned!"
        other = req("INSTRUCTION_A: a\nINSTRUCTION_B: a")
        assert backend.complete(other) == "100"  # fingerprint miss falls through

    def test_canned_matched_top_down(self):
        backend = ScriptedChatBackend(
            canned=[
                {"tag": "similarity", "contains": ["word"], "reply": "first"},
                {"tag": "similarity", "contains": ["word"], "reply": "second"},
            ]
        )
        assert backend.complete(req("a word here")) == "first"

    def test_placement_echoes_current_poses(self):
        trailer = render_scene_trailer(
            {
                "instruction": "noop",
                "movable_ids": ["a"],
                "objects": [
                    {"id": "a", "category": "cup", "movable": True,
                     "box": {"cx": 10.0, "cy": 20.0, "w": 5.0, "h": 5.0, "theta": 0.25}},
                    {"id": "b", "category": "plate", "movable": False,
                     "box": {"cx": 50.0, "cy": 60.0, "w": 30.0, "h": 30.0, "theta": 0.0}},
                ],
            }
        )
        backend = ScriptedChatBackend()
        records = parse_placements(backend.complete(req(trailer, tag="placement")))
        assert len(records) == 1
        assert records[0]["object_id"] == "a"
        assert (records[0]["x"], records[0]["y"], records[0]["rotation"]) == (10.0, 20.0, 0.25)


class TestSceneTrailer:
    def test_roundtrip(self):
        payload = {"instruction": "x", "objects": [], "movable_ids": ["a", "b"]}
        text = "preamble\n" + render_scene_trailer(payload) + "\n"
        assert parse_scene_trailer(text) == payload

    def test_missing_trailer(self):
        with pytest.raises(StructuredReplyError):
            parse_scene_trailer("no trailer here")


class _CountingHandler(BaseHTTPRequestHandler):
    status = 500
    calls = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length)) if length else {}
        type(self).calls.append({"path": self.path, "body": body, "auth": self.headers.get("Authorization")})
        if type(self).status == 200:
            reply = {"choices": [{"message": {"content": "pong"}}]}
            data = json.dumps(reply).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        else:
            self.send_response(type(self).status)
            self.send_header("Content-Length", "0")
            self.end_headers()

    def log_message(self, *args):
        pass


@pytest.fixture
def local_server():
    _CountingHandler.calls = []
    _CountingHandler.status = 500
    server = HTTPServer(("127.0.0.1", 0), _CountingHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, _CountingHandler
    server.shutdown()


class TestRemoteBackend:
    def test_success_path_and_wire_shape(self, local_server):
        server, handler = local_server
        handler.status = 200
        backend = RemoteChatBackend(
            f"http://127.0.0.1:{server.server_port}", model="test-model", api_key="sekrit", backoff_base=0.0
        )
        out = backend.complete(ChatRequest(messages=(("system", "s"), ("user", "hello")), tag="placement"))
        assert out == "pong"
        call = handler.calls[0]
        assert call["path"] == "/v1/chat/completions"
        assert call["auth"] == "Bearer sekrit"
        assert call["body"]["model"] == "test-model"
        assert call["body"]["messages"] == [{"role": "system", "content": "s"}, {"role": "user", "content": "hello"}]
        assert call["body"]["temperature"] == 0.0

    def test_server_errors_retried_then_fail(self, local_server):
        server, handler = local_server
        handler.status = 500
        backend = RemoteChatBackend(f"http://127.0.0.1:{server.server_port}", model="m", retries=2, backoff_base=0.0)
        with pytest.raises(BackendError, match="after 2 retries"):
            backend.complete(req("ping"))
        assert len(handler.calls) == 3  # initial + 2 retries

    def test_unreachable_address(self):
        backend = RemoteChatBackend("http://127.0.0.1:1", model="m", retries=2, backoff_base=0.0, timeout=0.5)
        with pytest.raises(BackendError, match="after 2 retries"):
            backend.complete(req("ping"))

    def test_client_error_not_retried(self, local_server):
        server, handler = local_server
        handler.status = 403
        backend = RemoteChatBackend(f"http://127.0.0.1:{server.server_port}", model="m", retries=2, backoff_base=0.0)
        with pytest.raises(BackendError, match="403"):
            backend.complete(req("ping"))
        assert len(handler.calls) == 1

    def test_temperature_zero_request_passes_through_unchanged(self):
        captured = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            captured["body"] = json

            class R:
                status_code = 200

                @staticmethod
                def json():
                    return {"choices": [{"message": {"content": "ok"}}]}

            return R()

        backend = RemoteChatBackend("http://x.invalid", model="m", post=fake_post)
        prompt = "exact bytes é \n\nwith blank lines  "
        backend.complete(ChatRequest(messages=(("user", prompt),), tag="placement", temperature=0.0))
        assert captured["body"]["messages"][0]["content"] == prompt


class TestBackendFactory:
    def test_names(self):
        assert isinstance(make_backend("scripted"), ScriptedChatBackend)
        assert isinstance(make_backend("oracle"), OracleChatBackend)
        with pytest.raises(ValueError):
            make_backend("imaginary")

    def test_capturing_backend_records(self):
        cap = CapturingBackend(ScriptedChatBackend())
        r = req("INSTRUCTION_A: a\nINSTRUCTION_B: b")
        cap.complete(r)
        assert cap.requests == [r]
        assert cap.replies == ["0"]


class TestCannedFileAndEnv:
    def test_from_canned_file(self, tmp_path):
        path = tmp_path / "canned.json"
        path.write_text(json.dumps([{"tag": "similarity", "contains": ["magic"], "reply": "42"}]))
        backend = ScriptedChatBackend.from_canned_file(str(path))
        assert backend.complete(req("some magic prompt")) == "42"

    def test_remote_from_env(self, monkeypatch):
        monkeypatch.setenv("REARRANGE_BASE_URL", "http://llm.invalid/api/")
        monkeypatch.setenv("REARRANGE_MODEL", "toy-model")
        monkeypatch.setenv("REARRANGE_API_KEY", "k3y")
        backend = RemoteChatBackend.from_env()
        assert backend.base_url == "http://llm.invalid/api"
        assert backend.model == "toy-model"
        assert backend.api_key == "k3y"

    def test_remote_from_env_requires_base_url(self, monkeypatch):
        monkeypatch.delenv("REARRANGE_BASE_URL", raising=False)
        with pytest.raises(BackendError, match="REARRANGE_BASE_URL"):
            RemoteChatBackend.from_env()
