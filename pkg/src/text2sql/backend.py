"""Completion backends: live HTTP client, record/replay cassette, scripted stubs.

Every backend honors stop sequences client-side, since some endpoints ignore
stop arrays. Cassette files are JSONL keyed by a stable request digest so a
recorded run replays bit-identically.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from .errors import AuthError, BackendExhausted, CassetteMiss

API_KEY_ENV = "TEXT2SQL_API_KEY"
BASE_URL_ENV = "TEXT2SQL_BASE_URL"
RPS_ENV = "TEXT2SQL_RPS"

ALLOWED_MAX_TOKENS = (350, 600)


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float
    max_tokens: int
    stop: tuple[str, ...]
    model_id: str

    def __post_init__(self):
        if self.temperature != 0.0:
            raise ValueError("greedy decoding only: temperature must be 0")
        if self.max_tokens not in ALLOWED_MAX_TOKENS:
            raise ValueError(f"max_tokens must be one of {ALLOWED_MAX_TOKENS}")
        if not self.stop:
            raise ValueError("stop sequences must be non-empty")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    finish_reason: str  # stop | length | error
    latency_ms: float


def request_digest(request: CompletionRequest) -> str:
    payload = json.dumps(
        {
            "prompt": request.prompt,
            "model_id": request.model_id,
            "max_tokens": request.max_tokens,
            "stop": list(request.stop),
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def truncate_at_stop(text: str, stop: tuple[str, ...]) -> str:
    for seq in stop:
        cut = text.find(seq)
        if cut >= 0:
            text = text[:cut]
    return text


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


class RateLimiter:
    """Serializes acquire() so the observed request rate never exceeds the cap."""

    def __init__(self, rate_per_sec: float,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate_per_sec <= 0:
            raise ValueError("rate must be positive")
        self._interval = 1.0 / rate_per_sec
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def acquire(self) -> float:
        with self._lock:
            now = self._clock()
            wait = self._next_allowed - now
            if wait > 0:
                self._sleep(wait)
                now = self._next_allowed
            self._next_allowed = max(now, self._next_allowed) + self._interval
            return max(wait, 0.0)


class ScriptedBackend:
    """Replays a fixed response queue in call order; used by unit tests."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self._lock = threading.Lock()
        self.calls: list[CompletionRequest] = []
        self.timestamps: list[float] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            self.calls.append(request)
            self.timestamps.append(time.monotonic())
            if not self._responses:
                raise BackendExhausted("scripted backend ran out of responses")
            text = self._responses.pop(0)
        return CompletionResponse(
            text=truncate_at_stop(text, request.stop), finish_reason="stop", latency_ms=0.0
        )


class DeterministicBackend:
    """Maps each prompt to a response via a pure function; safe under workers."""

    def __init__(self, fn: Callable[[CompletionRequest], str]):
        self._fn = fn
        self._lock = threading.Lock()
        self.calls: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            self.calls.append(request)
        text = truncate_at_stop(self._fn(request), request.stop)
        return CompletionResponse(text=text, finish_reason="stop", latency_ms=0.0)


class ReplayBackend:
    """Serves responses from a cassette file; unknown digests are a hard miss."""

    def __init__(self, cassette_path: Path | str):
        self.cassette_path = Path(cassette_path)
        self._entries: dict[str, CompletionResponse] = {}
        self._lock = threading.Lock()
        self.requested_digests: list[str] = []
        if self.cassette_path.exists():
            for line in self.cassette_path.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._entries[rec["digest"]] = CompletionResponse(
                    text=rec["response_text"],
                    finish_reason=rec.get("finish_reason", "stop"),
                    latency_ms=float(rec.get("latency_ms", 0.0)),
                )

    def __len__(self) -> int:
        return len(self._entries)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        digest = request_digest(request)
        with self._lock:
            self.requested_digests.append(digest)
        try:
            return self._entries[digest]
        except KeyError:
            raise CassetteMiss(digest) from None


class RecordingBackend:
    """Wraps another backend and appends every response to a cassette file."""

    def __init__(self, inner: Backend, cassette_path: Path | str):
        self._inner = inner
        self.cassette_path = Path(cassette_path)
        self._lock = threading.Lock()
        self.cassette_path.parent.mkdir(parents=True, exist_ok=True)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        response = self._inner.complete(request)
        entry = {
            "digest": request_digest(request),
            "model_id": request.model_id,
            "prompt_sha": hashlib.sha256(request.prompt.encode("utf-8")).hexdigest(),
            "response_text": response.text,
            "finish_reason": response.finish_reason,
            "latency_ms": response.latency_ms,
        }
        line = json.dumps(entry, sort_keys=True, ensure_ascii=False)
        with self._lock, self.cassette_path.open("a") as fh:
            fh.write(line + "\n")
        return response


class LiveBackend:
    """HTTP client for a chat- or completion-style endpoint.

    Transient failures (HTTP 429/5xx, timeouts) are retried with exponential
    backoff up to max_retries, then surface as BackendExhausted.
    """

    RETRYABLE = {429, 500, 502, 503, 504}

    def __init__(
        self,
        base_url: str | None = None,
        api_style: str = "chat",
        api_key_env: str = API_KEY_ENV,
        rate_per_sec: float | None = None,
        max_retries: int = 5,
        backoff_base: float = 2.0,
        timeout_s: float = 120.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or "").rstrip("/")
        if not self.base_url:
            raise AuthError(f"no endpoint configured: set {BASE_URL_ENV} or pass base_url")
        self.api_key = os.environ.get(api_key_env)
        if not self.api_key:
            raise AuthError(f"missing credential: set {api_key_env}")
        if api_style not in ("chat", "completions"):
            raise ValueError(f"unknown api_style: {api_style}")
        self.api_style = api_style
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout_s = timeout_s
        self._sleep = sleep
        if rate_per_sec is None:
            rate_per_sec = float(os.environ.get(RPS_ENV, "1"))
        self._limiter = RateLimiter(rate_per_sec)

    def _request_body(self, request: CompletionRequest) -> tuple[str, dict]:
        if self.api_style == "chat":
            url = f"{self.base_url}/chat/completions"
            body = {
                "model": request.model_id,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "stop": list(request.stop),
            }
        else:
            url = f"{self.base_url}/completions"
            body = {
                "model": request.model_id,
                "prompt": request.prompt,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "stop": list(request.stop),
            }
        return url, body

    @staticmethod
    def _extract_text(payload: dict, api_style: str) -> tuple[str, str]:
        choice = payload["choices"][0]
        if api_style == "chat":
            text = choice["message"]["content"]
        else:
            text = choice["text"]
        return text, choice.get("finish_reason") or "stop"

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        import httpx

        url, body = self._request_body(request)
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            self._limiter.acquire()
            started = time.perf_counter()
            try:
                response = httpx.post(url, json=body, headers=headers, timeout=self.timeout_s)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            latency_ms = (time.perf_counter() - started) * 1000.0
            if response.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials: HTTP {response.status_code}")
            if response.status_code in self.RETRYABLE:
                last_error = RuntimeError(f"HTTP {response.status_code}")
                continue
            response.raise_for_status()
            text, finish = self._extract_text(response.json(), self.api_style)
            return CompletionResponse(
                text=truncate_at_stop(text, request.stop),
                finish_reason=finish,
                latency_ms=latency_ms,
            )
        raise BackendExhausted(f"retries exhausted calling {url}: {last_error}")
