from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RetrievalHit:
    unit_id: str
    score: float
    text: str

    def to_dict(self) -> dict:
        return {"unit_id": self.unit_id, "score": self.score, "text": self.text}
