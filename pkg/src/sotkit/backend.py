"""Completion transport: a chat-completion HTTP client and a deterministic mock.

Both return one canonical result shape. Partial-answer echoes are handled
here (stripped when the model returned them as a prefix, collapsed when it
repeated them) so downstream parsing always sees the continuation text only.
The mock uses a virtual clock, so simulated latencies cost no real time.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .datasets import approx_tokens
from .errors import ConfigError, ProtocolError, RateLimited, TransportError
from .prompt_kit import RequestPayload

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    wall_latency: float
    finish_reason: str = "stop"
    approximate_tokens: bool = False

    def __post_init__(self):
        if self.wall_latency < 0 or self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ConfigError("latency and token counts must be non-negative")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    base_url: str = ""
    api_key_env: str = ""
    request_timeout: float = 120.0
    max_retries: int = 2
    retry_backoff: tuple[float, ...] = (1.0, 2.0)
    max_concurrency: int = 8
    mock_script_path: str = ""

    def __post_init__(self):
        if self.kind not in ("http-chat", "mock"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")


def load_backend_config(path: str | Path) -> BackendConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "retry_backoff" in doc:
        doc["retry_backoff"] = tuple(doc["retry_backoff"])
    try:
        return BackendConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad backend config {path}: {exc}") from exc


@dataclass(frozen=True)
class MockEntry:
    match: str
    text: str
    exact: bool = False
    prefill_per_token: float = 0.0
    decode_per_token: float = 0.0
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    status: int = 200

    def __post_init__(self):
        if self.prefill_per_token < 0 or self.decode_per_token < 0:
            raise ConfigError("simulated latencies must be >= 0")


class MockScript:
    """Prompt-matcher to scripted-response mapping."""

    def __init__(self, entries: list[MockEntry]):
        seen = set()
        for entry in entries:
            key = (entry.match, entry.exact)
            if key in seen:
                raise ConfigError(f"duplicate mock matcher {entry.match!r}")
            seen.add(key)
        self.entries = list(entries)

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([MockEntry(**e) for e in doc["entries"]])

    def lookup(self, prompt: str) -> MockEntry:
        for entry in self.entries:
            if entry.exact and entry.match == prompt:
                return entry
        for entry in self.entries:
            if not entry.exact and entry.match in prompt:
                return entry
        raise ProtocolError(f"no mock script entry matches prompt: {prompt[:80]!r}...")


class VirtualClock:
    """Monotone virtual time; advancing costs no real time."""

    def __init__(self):
        self._now = 0.0
        self._lock = threading.Lock()

    def advance(self, dt: float) -> float:
        with self._lock:
            self._now += dt
            return self._now

    @property
    def now(self) -> float:
        with self._lock:
            return self._now


def strip_partial_prefix(text: str, partial: str) -> tuple[str, int]:
    """Remove an echoed partial-answer prefix, collapsing repeats.

    Returns the canonical continuation text and how many copies of the
    prefix were removed. Some chat backends repeat the provided partial
    answer; repeats are collapsed so the prefix never appears twice.
    """
    if not partial:
        return text, 0
    stripped = 0
    while text.startswith(partial):
        text = text[len(partial):]
        stripped += 1
        # A repeat may be separated from the first copy by spaces only.
        lead = len(text) - len(text.lstrip(" "))
        if text[lead:].startswith(partial):
            text = text[lead:]
    return text, stripped


class MockBackend:
    """Deterministic scripted backend on a virtual clock."""

    kind = "mock"

    def __init__(self, cfg: BackendConfig, script: MockScript):
        self.cfg = cfg
        self.script = script
        self.clock = VirtualClock()
        self._sem = threading.Semaphore(cfg.max_concurrency)

    @property
    def max_concurrency(self) -> int:
        return self.cfg.max_concurrency

    def complete(self, payload: RequestPayload) -> CompletionResult:
        with self._sem:
            entry = self.script.lookup(payload.rendered_prompt)
            prompt_tokens = (entry.prompt_tokens if entry.prompt_tokens is not None
                             else payload.rendered_prompt_token_estimate)
            text, collapsed = strip_partial_prefix(entry.text, payload.partial_answer)
            if collapsed > 1:
                log.warning("collapsed %d repeated partial-answer prefixes", collapsed - 1)
            completion_tokens = (entry.completion_tokens if entry.completion_tokens is not None
                                 else approx_tokens(entry.text))
            latency = (entry.prefill_per_token * prompt_tokens
                       + entry.decode_per_token * completion_tokens)
            self.clock.advance(latency)
            approx = entry.prompt_tokens is None or entry.completion_tokens is None
            return CompletionResult(
                text=text,
                prompt_tokens=prompt_tokens,
                completion_tokens=completion_tokens,
                wall_latency=latency,
                finish_reason="stop",
                approximate_tokens=approx,
            )


class HttpChatBackend:
    """Standard chat-completion JSON endpoint with retry and a concurrency cap."""

    kind = "http-chat"

    def __init__(self, cfg: BackendConfig, session: requests.Session | None = None):
        if not cfg.base_url:
            raise ConfigError("http-chat backend needs base_url")
        self.cfg = cfg
        self.session = session or requests.Session()
        self._sem = threading.Semaphore(cfg.max_concurrency)

    @property
    def max_concurrency(self) -> int:
        return self.cfg.max_concurrency

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.cfg.api_key_env:
            key = os.environ.get(self.cfg.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def _body(self, payload: RequestPayload) -> dict:
        body: dict = {
            "messages": [{"role": r, "content": t} for r, t in payload.messages],
        }
        if payload.model:
            body["model"] = payload.model
        if payload.max_new_tokens is not None:
            body["max_tokens"] = payload.max_new_tokens
        if payload.temperature is not None:
            body["temperature"] = payload.temperature
        return body

    def complete(self, payload: RequestPayload) -> CompletionResult:
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        body = self._body(payload)
        last_exc: Exception | None = None
        with self._sem:
            start = time.time()
            for attempt in range(self.cfg.max_retries + 1):
                if attempt > 0:
                    backoff = self.cfg.retry_backoff
                    delay = backoff[min(attempt - 1, len(backoff) - 1)] if backoff else 0.0
                    time.sleep(delay)
                try:
                    resp = self.session.post(url, json=body, headers=self._headers(),
                                             timeout=self.cfg.request_timeout)
                except requests.RequestException as exc:
                    last_exc = exc
                    continue
                if resp.status_code == 429:
                    last_exc = RateLimited(f"429 from {url}")
                    continue
                if resp.status_code >= 400:
                    raise TransportError(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
                elapsed = time.time() - start
                return self._parse_response(resp, payload, elapsed)
            if isinstance(last_exc, RateLimited):
                raise last_exc
            raise TransportError(f"request failed after retries: {last_exc}")

    def _parse_response(self, resp: requests.Response, payload: RequestPayload,
                        elapsed: float) -> CompletionResult:
        try:
            doc = resp.json()
            text = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed chat-completion response: {exc}") from exc
        text, collapsed = strip_partial_prefix(text, payload.partial_answer)
        if collapsed > 1:
            log.warning("collapsed %d repeated partial-answer prefixes", collapsed - 1)
        usage = doc.get("usage") or {}
        approx = "prompt_tokens" not in usage or "completion_tokens" not in usage
        prompt_tokens = usage.get("prompt_tokens", payload.rendered_prompt_token_estimate)
        completion_tokens = usage.get("completion_tokens", approx_tokens(text))
        finish = (doc["choices"][0].get("finish_reason") or "stop")
        if finish not in ("stop", "length"):
            finish = "error"
        return CompletionResult(
            text=text,
            prompt_tokens=int(prompt_tokens),
            completion_tokens=int(completion_tokens),
            wall_latency=elapsed,
            finish_reason=finish,
            approximate_tokens=approx,
        )


Backend = MockBackend | HttpChatBackend


def make_backend(cfg: BackendConfig, script: MockScript | None = None) -> Backend:
    if cfg.kind == "mock":
        if script is None:
            if not cfg.mock_script_path:
                raise ConfigError("mock backend needs a script")
            script = MockScript.load(cfg.mock_script_path)
        return MockBackend(cfg, script)
    return HttpChatBackend(cfg)


def complete(payload: RequestPayload, backend: Backend) -> CompletionResult:
    return backend.complete(payload)


def usage_tokens(result: CompletionResult) -> tuple[int, int]:
    """(prefill, decode) accounting passthrough."""
    return result.prompt_tokens, result.completion_tokens
