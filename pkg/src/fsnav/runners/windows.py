"""Overlapping token windows for contexts longer than one model call."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidOverlap

DEFAULT_WINDOW = 200_000
DEFAULT_OVERLAP = 50_000


@dataclass(frozen=True)
class WindowPlan:
    spans: tuple[tuple[int, int], ...]
    window: int
    overlap: int

    @property
    def stride(self) -> int:
        return self.window - self.overlap

    def __len__(self) -> int:
        return len(self.spans)


def plan_windows(total_tokens: int, window: int = DEFAULT_WINDOW, overlap: int = DEFAULT_OVERLAP) -> WindowPlan:
    """Spans ``[i*stride, min(i*stride + window, total))`` until one reaches ``total``."""
    if total_tokens < 1:
        raise ValueError("total_tokens must be positive")
    if window < 1:
        raise ValueError("window must be positive")
    if not 0 <= overlap < window:
        raise InvalidOverlap(f"overlap {overlap} must be in [0, {window})")
    stride = window - overlap
    spans = []
    start = 0
    while True:
        end = min(start + window, total_tokens)
        spans.append((start, end))
        if end >= total_tokens:
            break
        start += stride
    return WindowPlan(tuple(spans), window, overlap)
