from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError, UnknownModel

ROLES = ("system", "user", "assistant", "tool")


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def __add__(self, other: TokenUsage) -> TokenUsage:
        return TokenUsage(self.prompt_tokens + other.prompt_tokens, self.completion_tokens + other.completion_tokens)

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens}

    @classmethod
    def from_dict(cls, d: dict | None) -> TokenUsage:
        if not d:
            return cls()
        return cls(int(d.get("prompt_tokens") or 0), int(d.get("completion_tokens") or 0))


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict
    id: str = ""

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "type": "function",
            "function": {"name": self.name, "arguments": json.dumps(self.arguments, sort_keys=True)},
        }


@dataclass(frozen=True)
class Message:
    role: str
    content: str
    tool_calls: tuple[ToolCall, ...] = ()
    tool_call_id: str | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")

    def to_wire(self) -> dict:
        d: dict = {"role": self.role, "content": self.content}
        if self.tool_calls:
            d["tool_calls"] = [c.to_wire() for c in self.tool_calls]
        if self.tool_call_id is not None:
            d["tool_call_id"] = self.tool_call_id
        return d


@dataclass(frozen=True)
class ToolSchema:
    name: str
    description: str
    parameters: dict

    def to_wire(self) -> dict:
        return {
            "type": "function",
            "function": {"name": self.name, "description": self.description, "parameters": self.parameters},
        }


@dataclass
class ChatRequest:
    model: str
    messages: list[Message]
    tool_schemas: list[ToolSchema] | None = None
    max_output_tokens: int | None = None
    # Routing labels for logs and mock matching; never sent over the wire.
    tags: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.messages:
            raise ValueError("ChatRequest needs at least one message")
        if self.tool_schemas:
            names = [t.name for t in self.tool_schemas]
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate tool names: {names}")
        if self.max_output_tokens is not None and self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    def to_wire(self) -> dict:
        payload: dict = {"model": self.model, "messages": [m.to_wire() for m in self.messages]}
        if self.tool_schemas:
            payload["tools"] = [t.to_wire() for t in self.tool_schemas]
        if self.max_output_tokens is not None:
            payload["max_tokens"] = self.max_output_tokens
        return payload


@dataclass
class ChatResponse:
    text: str
    tool_calls: list[ToolCall]
    usage: TokenUsage
    attempts: int = 1


class PriceTable:
    """USD per million prompt / completion tokens, keyed by model name."""

    def __init__(self, prices: dict[str, tuple[float, float]] | None = None):
        self.prices: dict[str, tuple[float, float]] = {}
        for model, (p_in, p_out) in (prices or {}).items():
            self.set(model, p_in, p_out)

    def set(self, model: str, prompt_per_million: float, completion_per_million: float) -> None:
        if prompt_per_million < 0 or completion_per_million < 0:
            raise ValueError(f"negative price for {model!r}")
        self.prices[model] = (float(prompt_per_million), float(completion_per_million))

    def __getitem__(self, model: str) -> tuple[float, float]:
        try:
            return self.prices[model]
        except KeyError:
            raise UnknownModel(model) from None

    def __contains__(self, model: str) -> bool:
        return model in self.prices

    @classmethod
    def from_dict(cls, d: dict) -> PriceTable:
        table = cls()
        for model, entry in d.get("models", d).items():
            table.set(model, entry["prompt_per_million"], entry["completion_per_million"])
        return table

    @classmethod
    def load(cls, path: str | Path) -> PriceTable:
        from ..config import read_config_file

        path = Path(path)
        if not path.exists():
            raise ConfigError(f"price table {path} not found")
        return cls.from_dict(read_config_file(path))


def cost(usage: TokenUsage, model: str, prices: PriceTable) -> float:
    p_in, p_out = prices[model]
    return usage.prompt_tokens * p_in / 1e6 + usage.completion_tokens * p_out / 1e6
