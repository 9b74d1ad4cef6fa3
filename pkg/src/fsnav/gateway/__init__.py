"""Chat-completion / embedding client with usage accounting and an offline mock."""

from .client import Gateway, TokenBucket, gateway_from_env
from .mock import MockTransport, hash_embedding
from .transport import HttpTransport, Transport
from .types import ChatRequest, ChatResponse, Message, PriceTable, TokenUsage, ToolCall, ToolSchema, cost

__all__ = [
    "ChatRequest",
    "ChatResponse",
    "Gateway",
    "HttpTransport",
    "Message",
    "MockTransport",
    "PriceTable",
    "TokenBucket",
    "TokenUsage",
    "ToolCall",
    "ToolSchema",
    "Transport",
    "cost",
    "gateway_from_env",
    "hash_embedding",
]
