"""Scriptable offline transport.

Fixture file (JSON)::

    {
      "chat": [
        {"match": {"contains": ["Question: Who"], "tags": {"method": "rag"}, "turn": 0},
         "reply": {"text": "Paris"}},
        {"match": {"tags": {"method": "react"}},
         "replies": [{"tool_calls": [{"name": "retriever", "arguments": {"query": "x"}}]},
                     {"text": "done"}]},
        {"match": {}, "error": {"status": 500, "body": "flaky"}, "times": 2}
      ],
      "embedding": {"dim": 64}
    }

Rules are tried in order; the first whose ``match`` holds wins. Match keys:
``model`` (exact), ``contains`` (all substrings present somewhere in the
conversation), ``last_contains`` (in the final message), ``not_contains``,
``tags`` (subset of the request tags), ``turn`` (number of assistant messages
already in the conversation). ``replies`` are consumed in order, the last one
repeating; ``times`` caps how often a rule can fire. ``usage`` defaults to a
4-characters-per-token count of the request and reply.

Embeddings default to a signed feature-hashing bag of words of width ``dim``;
``vectors`` maps exact input strings to fixed vectors.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from pathlib import Path

import numpy as np

from ..text import terms


def _conversation_text(payload: dict) -> list[str]:
    return [m.get("content") or "" for m in payload.get("messages", [])]


def hash_embedding(text: str, dim: int) -> list[float]:
    vec = np.zeros(dim, dtype=np.float64)
    for tok in terms(text):
        h = int.from_bytes(hashlib.sha256(tok.encode("utf-8")).digest()[:8], "little")
        vec[h % dim] += 1.0 if (h >> 63) & 1 == 0 else -1.0
    return vec.tolist()


class MockTransport:
    def __init__(self, fixture: dict | None = None):
        fixture = fixture or {}
        self.rules: list[dict] = list(fixture.get("chat", []))
        self.embedding = dict(fixture.get("embedding", {}))
        self.calls: list[tuple[str, dict, dict]] = []
        self._uses = [0] * len(self.rules)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> MockTransport:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def add_rule(self, rule: dict) -> None:
        with self._lock:
            self.rules.append(rule)
            self._uses.append(0)

    @property
    def chat_calls(self) -> int:
        return sum(1 for path, _, _ in self.calls if path == "chat/completions")

    @property
    def embedding_calls(self) -> int:
        return sum(1 for path, _, _ in self.calls if path == "embeddings")

    def send(self, path: str, payload: dict, tags: dict[str, str]) -> tuple[int, dict | str]:
        with self._lock:
            self.calls.append((path, payload, dict(tags)))
            if path == "embeddings":
                return 200, self._embed(payload)
            return self._chat(payload, tags)

    # -- chat

    def _matches(self, match: dict, payload: dict, tags: dict[str, str]) -> bool:
        msgs = _conversation_text(payload)
        if "model" in match and match["model"] != payload.get("model"):
            return False
        joined = "\n".join(msgs)
        if any(s not in joined for s in match.get("contains", [])):
            return False
        if any(s in joined for s in match.get("not_contains", [])):
            return False
        last = msgs[-1] if msgs else ""
        if any(s not in last for s in match.get("last_contains", [])):
            return False
        for k, v in match.get("tags", {}).items():
            if tags.get(k) != v:
                return False
        if "turn" in match:
            turn = sum(1 for m in payload.get("messages", []) if m.get("role") == "assistant")
            if turn != match["turn"]:
                return False
        return True

    def _chat(self, payload: dict, tags: dict[str, str]) -> tuple[int, dict | str]:
        for i, rule in enumerate(self.rules):
            if "times" in rule and self._uses[i] >= rule["times"]:
                continue
            if not self._matches(rule.get("match", {}), payload, tags):
                continue
            n = self._uses[i]
            self._uses[i] += 1
            if "error" in rule:
                err = rule["error"]
                return int(err.get("status", 500)), err.get("body", "mock error")
            if "replies" in rule:
                replies = rule["replies"]
                reply = replies[min(n, len(replies) - 1)]
            else:
                reply = rule.get("reply", {})
            return 200, self._render(reply, payload)
        return 404, "no mock rule matched the request"

    def _render(self, reply: dict, payload: dict) -> dict:
        text = reply.get("text", "")
        turn = sum(1 for m in payload.get("messages", []) if m.get("role") == "assistant")
        calls = [
            {
                "id": f"call_{turn}_{j}",
                "type": "function",
                "function": {"name": c["name"], "arguments": json.dumps(c.get("arguments", {}), sort_keys=True)},
            }
            for j, c in enumerate(reply.get("tool_calls", []))
        ]
        usage = reply.get("usage")
        if usage is None:
            prompt_chars = sum(len(s) for s in _conversation_text(payload))
            out_chars = len(text) + sum(len(c["function"]["arguments"]) for c in calls)
            usage = {"prompt_tokens": math.ceil(prompt_chars / 4), "completion_tokens": math.ceil(out_chars / 4)}
        message: dict = {"role": "assistant", "content": text if text or not calls else None}
        if calls:
            message["tool_calls"] = calls
        return {
            "object": "chat.completion",
            "model": payload.get("model"),
            "choices": [{"index": 0, "message": message, "finish_reason": "tool_calls" if calls else "stop"}],
            "usage": usage,
        }

    # -- embeddings

    def _embed(self, payload: dict) -> dict:
        dim = int(self.embedding.get("dim", 64))
        fixed = self.embedding.get("vectors", {})
        inputs = payload["input"]
        data = [
            {"object": "embedding", "index": i, "embedding": fixed.get(t) or hash_embedding(t, dim)}
            for i, t in enumerate(inputs)
        ]
        tokens = sum(math.ceil(len(t) / 4) for t in inputs)
        return {"object": "list", "data": data, "usage": {"prompt_tokens": tokens, "completion_tokens": 0}}
