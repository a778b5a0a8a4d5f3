import json
import threading

import pytest

from sotkit.backend import (
    BackendConfig,
    CompletionResult,
    HttpChatBackend,
    MockBackend,
    MockEntry,
    MockScript,
    make_backend,
    strip_partial_prefix,
    usage_tokens,
)
from sotkit.datasets import approx_tokens
from sotkit.errors import ConfigError, ProtocolError, RateLimited, TransportError
from sotkit.prompt_kit import ModelProfile, RequestPayload, assemble_skeleton_request


def _payload(text: str, partial: str = "") -> RequestPayload:
    messages = (("user", text),)
    if partial:
        messages = messages + (("assistant", partial),)
    return RequestPayload(messages=messages, partial_answer=partial)


class TestMockBackend:
    def test_scripted_lookup(self):
        script = MockScript([MockEntry(match="SKEL-Q1", text="1. A\n2. B",
                                       decode_per_token=0.01)])
        backend = MockBackend(BackendConfig(kind="mock"), script)
        result = backend.complete(_payload("SKEL-Q1 please"))
        assert result.text == "1. A\n2. B"
        assert result.wall_latency == 0.01 * approx_tokens("1. A\n2. B")

    def test_partial_prefix_stripped_then_reprepended(self):
        script = MockScript([MockEntry(match="SKEL", text="1. A\n2. B")])
        backend = MockBackend(BackendConfig(kind="mock"), script)
        result = backend.complete(_payload("SKEL", partial="1."))
        assert result.text == " A\n2. B"
        # String-level round trip: caller re-prepends before parsing.
        assert "1." + result.text == "1. A\n2. B"

    def test_determinism(self):
        entries = [MockEntry(match="Q", text="answer", decode_per_token=0.5,
                             completion_tokens=10, prompt_tokens=4,
                             prefill_per_token=0.25)]
        results = []
        for _ in range(2):
            backend = MockBackend(BackendConfig(kind="mock"), MockScript(entries))
            results.append(backend.complete(_payload("Q")))
        assert results[0] == results[1]
        assert results[0].wall_latency == 0.25 * 4 + 0.5 * 10

    def test_virtual_clock_advances_without_sleeping(self):
        script = MockScript([MockEntry(match="Q", text="a", decode_per_token=1000.0,
                                       completion_tokens=100)])
        backend = MockBackend(BackendConfig(kind="mock"), script)
        backend.complete(_payload("Q"))
        assert backend.clock.now == 100000.0

    def test_no_matching_entry(self):
        backend = MockBackend(BackendConfig(kind="mock"), MockScript([]))
        with pytest.raises(ProtocolError):
            backend.complete(_payload("unknown"))

    def test_duplicate_matcher_rejected(self):
        with pytest.raises(ConfigError):
            MockScript([MockEntry(match="a", text="x"),
                        MockEntry(match="a", text="y")])

    def test_usage_passthrough(self):
        script = MockScript([MockEntry(match="Q", text="abc",
                                       prompt_tokens=155, completion_tokens=40)])
        backend = MockBackend(BackendConfig(kind="mock"), script)
        result = backend.complete(_payload("Q"))
        assert usage_tokens(result) == (155, 40)
        assert not result.approximate_tokens

    def test_missing_usage_marks_approximate(self):
        script = MockScript([MockEntry(match="Q", text="two words")])
        backend = MockBackend(BackendConfig(kind="mock"), script)
        result = backend.complete(_payload("Q"))
        assert result.approximate_tokens
        assert result.completion_tokens == 2

    def test_skeleton_prefill_matches_payload_estimate(self, profile):
        payload = assemble_skeleton_request("What is graphite?", profile)
        script = MockScript([MockEntry(match="provide the skeleton",
                                       text="1. Carbon.")])
        backend = MockBackend(BackendConfig(kind="mock"), script)
        result = backend.complete(payload)
        assert result.prompt_tokens == payload.rendered_prompt_token_estimate


class TestPrefixStrip:
    def test_no_partial(self):
        assert strip_partial_prefix("text", "") == ("text", 0)

    def test_single_echo(self):
        assert strip_partial_prefix("1. A", "1.") == (" A", 1)

    def test_repeated_prefix_collapsed(self):
        text, stripped = strip_partial_prefix("1. 1. A", "1.")
        assert text == " A"
        assert stripped == 2

    def test_not_echoed(self):
        assert strip_partial_prefix(" A\n2. B", "1.") == (" A\n2. B", 0)

    def test_never_contains_prefix_twice(self):
        text, _ = strip_partial_prefix("3. Dim Sum.3. Dim Sum. expanded", "3. Dim Sum.")
        assert not text.startswith("3. Dim Sum.")


class _FakeResponse:
    def __init__(self, status_code: int, doc: dict | None = None):
        self.status_code = status_code
        self._doc = doc or {}
        self.text = json.dumps(self._doc)

    def json(self):
        return self._doc


class _FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls += 1
        return self.responses.pop(0)


def _http_cfg(**kwargs) -> BackendConfig:
    defaults = dict(kind="http-chat", base_url="http://example.test/v1",
                    max_retries=2, retry_backoff=())
    defaults.update(kwargs)
    return BackendConfig(**defaults)


class TestHttpBackend:
    def test_success_parses_choice_and_usage(self):
        doc = {"choices": [{"message": {"content": "hello"}, "finish_reason": "stop"}],
               "usage": {"prompt_tokens": 5, "completion_tokens": 2}}
        backend = HttpChatBackend(_http_cfg(), session=_FakeSession([_FakeResponse(200, doc)]))
        result = backend.complete(_payload("hi"))
        assert result.text == "hello"
        assert usage_tokens(result) == (5, 2)

    def test_three_429s_with_two_retries_is_rate_limited(self):
        session = _FakeSession([_FakeResponse(429)] * 3)
        backend = HttpChatBackend(_http_cfg(), session=session)
        with pytest.raises(RateLimited):
            backend.complete(_payload("hi"))
        assert session.calls == 3

    def test_retry_then_success_returns_same_text(self):
        doc = {"choices": [{"message": {"content": "ok"}}]}
        session = _FakeSession([_FakeResponse(429), _FakeResponse(200, doc)])
        backend = HttpChatBackend(_http_cfg(), session=session)
        assert backend.complete(_payload("hi")).text == "ok"

    def test_malformed_body_is_protocol_error(self):
        backend = HttpChatBackend(
            _http_cfg(), session=_FakeSession([_FakeResponse(200, {"nope": 1})]))
        with pytest.raises(ProtocolError):
            backend.complete(_payload("hi"))

    def test_http_500_is_transport_error(self):
        backend = HttpChatBackend(
            _http_cfg(), session=_FakeSession([_FakeResponse(500)]))
        with pytest.raises(TransportError):
            backend.complete(_payload("hi"))


class TestConfig:
    def test_bad_kind_rejected(self):
        with pytest.raises(ConfigError):
            BackendConfig(kind="grpc")

    def test_concurrency_bound(self):
        with pytest.raises(ConfigError):
            BackendConfig(max_concurrency=0)

    def test_make_backend_mock_needs_script(self):
        with pytest.raises(ConfigError):
            make_backend(BackendConfig(kind="mock"))

    def test_negative_latency_rejected(self):
        with pytest.raises(ConfigError):
            CompletionResult(text="a", prompt_tokens=1, completion_tokens=1,
                             wall_latency=-1.0)
