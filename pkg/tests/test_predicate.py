import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from callcheck.predicate import (
    BackendError,
    DetectResult,
    ExternalModelBackend,
    LexiconBackend,
    LinkError,
    detect,
    link_requirements,
    load_lexicon,
    serialize_lexicon,
)
from callcheck.templates import default_requirement_set
from callcheck.simgen import DEFAULT_LEXICON
from helpers import make_trace

ADDRESS_LEXICON = LexiconBackend(
    {"ask address": ["where are you", "what is the address"]}
)


class TestLexiconBackend:
    def test_substring_match_case_insensitive(self):
        assert ADDRESS_LEXICON.evaluate("WHERE ARE you located?", "ask address")

    def test_whitespace_normalized(self):
        assert ADDRESS_LEXICON.evaluate("what   is\tthe address", "ask address")

    def test_no_match(self):
        assert not ADDRESS_LEXICON.evaluate("Hello.", "ask address")

    def test_unknown_action_is_backend_error(self):
        with pytest.raises(BackendError, match="not in lexicon"):
            ADDRESS_LEXICON.evaluate("Hello.", "mystery")

    def test_anchored_prefix(self):
        backend = LexiconBackend({"greet": ["^nine one one"]})
        assert backend.evaluate("Nine one one, what is your emergency?", "greet")
        assert not backend.evaluate("I said nine one one.", "greet")

    def test_anchored_suffix(self):
        backend = LexiconBackend({"bye": ["goodbye$"]})
        assert backend.evaluate("Okay, goodbye", "bye")
        assert not backend.evaluate("goodbye for now", "bye")

    def test_exact_anchor(self):
        backend = LexiconBackend({"ok": ["^okay$"]})
        assert backend.evaluate(" Okay ", "ok")
        assert not backend.evaluate("okay then", "ok")

    def test_empty_pattern_list_rejected(self):
        with pytest.raises(ValueError, match="empty pattern list"):
            LexiconBackend({"a": []})

    def test_load_and_serialize_round_trip(self):
        backend = load_lexicon(serialize_lexicon(LexiconBackend(DEFAULT_LEXICON)))
        assert backend.lexicon == LexiconBackend(DEFAULT_LEXICON).lexicon

    def test_load_rejects_non_object(self):
        with pytest.raises(ValueError, match="JSON object"):
            load_lexicon("[1, 2]")

    def test_load_rejects_bad_patterns(self):
        with pytest.raises(ValueError, match="list of strings"):
            load_lexicon('{"a": "not-a-list"}')


class TestDetect:
    def test_direct_lexicon_match(self):
        result = detect(
            ["Where are you located?", "Okay."], "ask address", ADDRESS_LEXICON
        )
        assert result == DetectResult(holds=True, witness=0)

    def test_empty_window(self):
        assert detect([], "ask address", ADDRESS_LEXICON) == DetectResult(False, None)

    def test_no_pattern_matches(self):
        assert detect(["Hello."], "ask address", ADDRESS_LEXICON) == DetectResult(
            False, None
        )

    def test_accepts_utterance_objects(self):
        trace = make_trace([("ct", "Hello."), ("ct", "What is the address?")])
        result = detect(trace.utterances, "ask address", ADDRESS_LEXICON)
        assert result == DetectResult(holds=True, witness=1)

    def test_witness_minimality_exhaustive(self):
        rng = random.Random(5)
        texts = ["where are you", "hello", "what is the address", "thanks"]
        for _ in range(200):
            window = [rng.choice(texts) for _ in range(rng.randint(0, 6))]
            result = detect(window, "ask address", ADDRESS_LEXICON)
            matches = [
                i
                for i, t in enumerate(window)
                if ADDRESS_LEXICON.evaluate(t, "ask address")
            ]
            if matches:
                assert result.holds and result.witness == min(matches)
            else:
                assert not result.holds and result.witness is None

    def test_monotone_under_window_extension(self):
        rng = random.Random(6)
        texts = ["where are you", "hello", "thanks"]
        for _ in range(100):
            window = [rng.choice(texts) for _ in range(rng.randint(0, 5))]
            extension = window + [rng.choice(texts)]
            if detect(window, "ask address", ADDRESS_LEXICON).holds:
                assert detect(extension, "ask address", ADDRESS_LEXICON).holds

    def test_backend_error_carries_window_index(self):
        class Exploding(LexiconBackend):
            def evaluate(self, text, action):
                if text == "boom":
                    raise BackendError("backend down")
                return super().evaluate(text, action)

        backend = Exploding({"ask address": ["where are you"]})
        with pytest.raises(BackendError) as excinfo:
            detect(["hello", "boom"], "ask address", backend)
        assert excinfo.value.utterance_index == 1


class TestLink:
    def test_links_when_all_labels_resolve(self):
        linked = link_requirements(
            default_requirement_set(), LexiconBackend(DEFAULT_LEXICON)
        )
        assert len(linked.requirements) == 10

    def test_missing_labels_all_reported(self):
        backend = LexiconBackend({"ask address": ["x"]})
        with pytest.raises(LinkError) as excinfo:
            link_requirements(default_requirement_set(), backend)
        assert "provides name / phone" in str(excinfo.value)
        assert len(excinfo.value.missing) > 1

    def test_empty_set_links(self):
        from callcheck.formulas import RequirementSet

        linked = link_requirements(RequirementSet(requirements=()), LexiconBackend({"a": ["b"]}))
        assert len(linked.requirements) == 0


# --- external model backend over a local stub service -----------------------


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers["Content-Length"])
        prompt = json.loads(self.rfile.read(length))["prompt"]
        self.server.calls.append(prompt)
        reply = self.server.reply_fn(prompt)
        body = json.dumps(reply).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_service():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    server.calls = []
    server.reply_fn = lambda prompt: {
        "text": "yes" if "address" in prompt.lower() else "no"
    }
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        thread.join(timeout=2)


def _endpoint(server) -> str:
    return f"http://127.0.0.1:{server.server_address[1]}/"


class TestExternalModelBackend:
    def test_wire_contract_yes_no(self, stub_service):
        backend = ExternalModelBackend(endpoint=_endpoint(stub_service))
        assert backend.evaluate("What is the address?", "ask address") is True
        assert backend.evaluate("Hello there.", "greet caller") is False

    def test_cache_prevents_repeat_calls(self, stub_service):
        backend = ExternalModelBackend(endpoint=_endpoint(stub_service))
        for _ in range(3):
            backend.evaluate("What is the address?", "ask address")
        assert len(stub_service.calls) == 1

    def test_distinct_pairs_each_call_once(self, stub_service):
        backend = ExternalModelBackend(endpoint=_endpoint(stub_service))
        backend.evaluate("a", "x")
        backend.evaluate("a", "y")
        backend.evaluate("b", "x")
        backend.evaluate("a", "x")
        assert len(stub_service.calls) == 3

    def test_disk_cache_survives_new_instance(self, stub_service, tmp_path):
        backend = ExternalModelBackend(
            endpoint=_endpoint(stub_service), cache_dir=tmp_path
        )
        backend.evaluate("What is the address?", "ask address")
        fresh = ExternalModelBackend(
            endpoint=_endpoint(stub_service), cache_dir=tmp_path
        )
        assert fresh.evaluate("What is the address?", "ask address") is True
        assert len(stub_service.calls) == 1

    def test_unparseable_reply_is_error_not_false(self, stub_service):
        stub_service.reply_fn = lambda prompt: {"text": "probably maybe"}
        backend = ExternalModelBackend(endpoint=_endpoint(stub_service))
        with pytest.raises(BackendError, match="unparseable"):
            backend.evaluate("x", "y")

    def test_lenient_reply_parsing(self, stub_service):
        replies = iter(["Yes.", " NO ", "True", "negative"])
        stub_service.reply_fn = lambda prompt: {"text": next(replies)}
        backend = ExternalModelBackend(endpoint=_endpoint(stub_service))
        assert backend.evaluate("1", "a") is True
        assert backend.evaluate("2", "a") is False
        assert backend.evaluate("3", "a") is True
        assert backend.evaluate("4", "a") is False

    def test_missing_text_field_is_error(self, stub_service):
        stub_service.reply_fn = lambda prompt: {"answer": "yes"}
        backend = ExternalModelBackend(endpoint=_endpoint(stub_service))
        with pytest.raises(BackendError, match="text"):
            backend.evaluate("x", "y")

    def test_unreachable_endpoint_is_backend_error(self):
        backend = ExternalModelBackend(
            endpoint="http://127.0.0.1:1/", timeout_ms=200
        )
        with pytest.raises(BackendError, match="request failed"):
            backend.evaluate("x", "y")

    def test_prompt_contains_action_and_utterance(self, stub_service):
        backend = ExternalModelBackend(endpoint=_endpoint(stub_service))
        backend.evaluate("Some utterance text", "some action")
        assert "some action" in stub_service.calls[0]
        assert "Some utterance text" in stub_service.calls[0]

    def test_from_env_requires_endpoint(self):
        with pytest.raises(ValueError, match="PREDICATE_ENDPOINT"):
            ExternalModelBackend.from_env(env={})

    def test_from_env_reads_settings(self, tmp_path):
        backend = ExternalModelBackend.from_env(
            env={
                "PREDICATE_ENDPOINT": "http://example.invalid/",
                "PREDICATE_TIMEOUT_MS": "2500",
                "PREDICATE_CACHE_DIR": str(tmp_path),
            }
        )
        assert backend.timeout_ms == 2500
        assert backend.cache_dir == tmp_path

    def test_template_must_have_placeholders(self):
        with pytest.raises(ValueError, match="placeholder|{action}"):
            ExternalModelBackend(endpoint="http://x/", prompt_template="static")
