"""Wire transports. A transport moves one JSON payload to an endpoint path and
returns ``(status, body)``; retry policy lives in the client."""

from __future__ import annotations

import os
from typing import Protocol

import requests

from ..errors import EndpointError, Timeout


class Transport(Protocol):
    def send(self, path: str, payload: dict, tags: dict[str, str]) -> tuple[int, dict | str]: ...


class HttpTransport:
    """JSON-over-HTTP to a chat-completions compatible base URL."""

    def __init__(self, base_url: str, api_key: str | None = None, timeout_s: float = 600.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout_s = timeout_s
        self._session = requests.Session()

    def send(self, path: str, payload: dict, tags: dict[str, str]) -> tuple[int, dict | str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(f"{self.base_url}/{path}", json=payload, headers=headers, timeout=self.timeout_s)
        except requests.Timeout as e:
            raise Timeout(str(e)) from e
        except requests.ConnectionError as e:
            raise EndpointError(None, str(e)) from e
        try:
            body: dict | str = resp.json()
        except ValueError:
            body = resp.text
        return resp.status_code, body


def http_from_env(prefix: str = "FSNAV") -> HttpTransport:
    """Build a transport from ``FSNAV_BASE_URL`` / ``FSNAV_API_KEY`` (OpenAI names as fallback)."""
    base = os.environ.get(f"{prefix}_BASE_URL") or os.environ.get("OPENAI_BASE_URL") or "https://api.openai.com/v1"
    key = os.environ.get(f"{prefix}_API_KEY") or os.environ.get("OPENAI_API_KEY")
    timeout = float(os.environ.get(f"{prefix}_TIMEOUT_S", "600"))
    return HttpTransport(base, key, timeout)
