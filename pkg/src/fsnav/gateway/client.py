from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from collections.abc import Callable
from pathlib import Path

from ..errors import DimensionMismatch, EndpointError, Timeout
from .mock import MockTransport
from .transport import Transport, http_from_env
from .types import ChatRequest, ChatResponse, TokenUsage, ToolCall

logger = logging.getLogger(__name__)

RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


class TokenBucket:
    """Blocking requests-per-minute limiter."""

    def __init__(self, per_minute: float, clock: Callable[[], float] = time.monotonic, sleep=time.sleep):
        self.capacity = max(1.0, per_minute)
        self.rate = per_minute / 60.0
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self.sleep(wait)


class Gateway:
    """Chat and embedding client with bounded retries, per-model rate limits and
    usage accounting.

    ``recorder`` arguments accept any object with ``event(kind, payload, usage=...)``
    and ``log_request(payload, body)``; see :class:`fsnav.trace.TrajectoryRecorder`.
    """

    def __init__(
        self,
        transport: Transport,
        *,
        max_attempts: int = 5,
        backoff_base_s: float = 1.0,
        requests_per_minute: float | None = None,
        embed_batch_size: int = 64,
        sleep: Callable[[float], None] = time.sleep,
        seed: int = 0,
        embed_transport: Transport | None = None,
    ):
        self.transport = transport
        self.embed_transport = embed_transport or transport
        self.max_attempts = max_attempts
        self.backoff_base_s = backoff_base_s
        self.requests_per_minute = requests_per_minute
        self.embed_batch_size = embed_batch_size
        self.sleep = sleep
        self._rng = random.Random(seed)
        self._buckets: dict[str, TokenBucket] = {}
        self._lock = threading.Lock()
        self.usage_by_model: dict[str, TokenUsage] = {}
        self.last_attempts = 0

    # -- plumbing

    def _bucket(self, model: str) -> TokenBucket | None:
        if not self.requests_per_minute:
            return None
        with self._lock:
            if model not in self._buckets:
                self._buckets[model] = TokenBucket(self.requests_per_minute)
            return self._buckets[model]

    def _send(self, transport: Transport, path: str, payload: dict, model: str, tags: dict[str, str]) -> tuple[dict, int]:
        bucket = self._bucket(model)
        last_exc: Exception | None = None
        for attempt in range(self.max_attempts):
            if bucket:
                bucket.acquire()
            try:
                status, body = transport.send(path, payload, tags)
            except Timeout as e:
                last_exc = e
            except EndpointError as e:
                if e.status is not None and e.status not in RETRY_STATUSES:
                    raise
                last_exc = e
            else:
                if 200 <= status < 300 and isinstance(body, dict):
                    return body, attempt + 1
                text = body if isinstance(body, str) else json.dumps(body)
                err = EndpointError(status, text)
                if status not in RETRY_STATUSES:
                    raise err
                last_exc = err
            if attempt + 1 < self.max_attempts:
                with self._lock:
                    jitter = self._rng.uniform(0, 0.5)
                delay = self.backoff_base_s * (2**attempt) * (1 + jitter)
                logger.warning("%s attempt %d failed (%s); retrying in %.1fs", path, attempt + 1, last_exc, delay)
                self.sleep(delay)
        assert last_exc is not None
        raise last_exc

    def _account(self, model: str, usage: TokenUsage) -> None:
        with self._lock:
            self.usage_by_model[model] = self.usage_by_model.get(model, TokenUsage()) + usage

    # -- public API

    def chat(self, req: ChatRequest, recorder=None) -> ChatResponse:
        payload = req.to_wire()
        body, attempts = self._send(self.transport, "chat/completions", payload, req.model, req.tags)
        self.last_attempts = attempts
        try:
            message = body["choices"][0]["message"]
        except (KeyError, IndexError, TypeError):
            raise EndpointError(200, f"malformed chat response: {json.dumps(body)[:500]}") from None
        calls = []
        for c in message.get("tool_calls") or []:
            fn = c.get("function", {})
            raw = fn.get("arguments") or "{}"
            try:
                args = json.loads(raw) if isinstance(raw, str) else dict(raw)
            except json.JSONDecodeError:
                args = {"_raw": raw}
            calls.append(ToolCall(fn.get("name", ""), args, c.get("id", "")))
        text = message.get("content")
        if text is None and not calls:
            raise EndpointError(200, "response carries neither text nor tool calls")
        usage = TokenUsage.from_dict(body.get("usage"))
        self._account(req.model, usage)
        resp = ChatResponse(text or "", calls, usage, attempts)
        if recorder is not None:
            recorder.log_request(payload, body)
            recorder.event("ModelMessage", resp.text, usage=usage, tool_calls=[c.name for c in calls] or None)
        return resp

    def embed(self, texts: list[str], model: str) -> list[list[float]]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        out: list[list[float]] = []
        dim: int | None = None
        for start in range(0, len(texts), self.embed_batch_size):
            batch = texts[start : start + self.embed_batch_size]
            body, _ = self._send(self.embed_transport, "embeddings", {"model": model, "input": batch}, model, {})
            data = sorted(body.get("data", []), key=lambda d: d.get("index", 0))
            if len(data) != len(batch):
                raise EndpointError(200, f"expected {len(batch)} embeddings, got {len(data)}")
            for d in data:
                vec = [float(x) for x in d["embedding"]]
                if dim is None:
                    dim = len(vec)
                elif len(vec) != dim:
                    raise DimensionMismatch(f"embedding length {len(vec)} differs from {dim}")
                out.append(vec)
            self._account(model, TokenUsage.from_dict(body.get("usage")))
        return out


def gateway_from_env(mock: str | Path | None = None, **kwargs) -> Gateway:
    """Mock transport if a fixture is given (or ``FSNAV_MOCK`` is set), else HTTP from env."""
    mock = mock or os.environ.get("FSNAV_MOCK")
    if mock:
        return Gateway(MockTransport.from_file(mock), **kwargs)
    embed_transport = http_from_env("FSNAV_EMBED") if os.environ.get("FSNAV_EMBED_BASE_URL") else None
    return Gateway(http_from_env(), embed_transport=embed_transport, **kwargs)
