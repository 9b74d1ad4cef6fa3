"""Shared runner plumbing: run results, per-run environment, prompt variables."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import sanitize_id
from ..datasets import Dataset, DataRoot, DatasetStore, Question
from ..gateway.types import TokenUsage
from ..retriever.hits import RetrievalHit
from ..text import DEFAULT_TOKENIZER, Tokenizer
from ..trace import LogicalClock, TrajectoryRecorder


@dataclass
class RunResult:
    question_id: str
    method: str
    answer_text: str
    trajectory_path: str  # relative to the run directory
    usage: TokenUsage
    wall_time: float
    model: str
    dataset: str = ""
    flags: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        d = {
            "question_id": self.question_id,
            "method": self.method,
            "dataset": self.dataset,
            "model": self.model,
            "answer_text": self.answer_text,
            "trajectory_path": self.trajectory_path,
            "usage": self.usage.to_dict(),
            "wall_time": self.wall_time,
            "flags": self.flags,
        }
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunResult:
        return cls(
            question_id=d["question_id"],
            method=d["method"],
            answer_text=d["answer_text"],
            trajectory_path=d["trajectory_path"],
            usage=TokenUsage.from_dict(d.get("usage")),
            wall_time=float(d.get("wall_time", 0.0)),
            model=d.get("model", ""),
            dataset=d.get("dataset", ""),
            flags=list(d.get("flags", [])),
            error=d.get("error"),
        )


@dataclass
class RunEnv:
    """Everything a runner needs for one experiment; shared by all questions."""

    store: DatasetStore
    model: str
    run_dir: Path
    method: str
    gateway: object | None = None
    data_root: DataRoot | None = None
    tokenizer: Tokenizer = DEFAULT_TOKENIZER
    deterministic: bool = False
    seed: int = 0
    extra_env: dict[str, str] = field(default_factory=dict)

    @property
    def dataset(self) -> Dataset:
        return self.store.dataset

    def file_stem(self, question_id: str) -> str:
        return sanitize_id(question_id)

    def trajectory_rel(self, question_id: str) -> str:
        return f"trajectories/{self.file_stem(question_id)}.jsonl"

    def recorder(self, question_id: str) -> TrajectoryRecorder:
        return TrajectoryRecorder(
            self.run_dir / self.trajectory_rel(question_id),
            request_log=self.run_dir / "requests" / f"{self.file_stem(question_id)}.jsonl",
            clock=LogicalClock() if self.deterministic else None,
        )

    def start_timer(self):
        start = time.monotonic()
        return lambda: 0.0 if self.deterministic else round(time.monotonic() - start, 3)

    def result(self, q: Question, answer: str, recorder: TrajectoryRecorder, elapsed: float, flags=()) -> RunResult:
        return RunResult(
            question_id=q.id,
            method=self.method,
            answer_text=answer,
            trajectory_path=self.trajectory_rel(q.id),
            usage=recorder.usage,
            wall_time=elapsed,
            model=self.model,
            dataset=self.dataset.value,
            flags=list(flags),
        )

    def tags(self, q: Question, method: str) -> dict[str, str]:
        return {"method": method, "dataset": self.dataset.value, "question_id": q.id}


def question_vars(q: Question) -> dict[str, str]:
    """Template variables describing the question itself (both capitalizations)."""
    v = {"question": q.text, "Question": q.text}
    if q.choices is not None:
        for letter, choice in zip("ABCD", q.choices):
            v[f"Choice_{letter}"] = choice
    if q.datapoint_id is not None:
        v["LongBench_datapoint_id"] = q.datapoint_id
        v["oolong_datapoint_id"] = q.datapoint_id
    return v


def format_document(unit_id: str, text: str) -> str:
    return f"Document {unit_id}:\n{text}"


def format_units(hits: list[RetrievalHit]) -> str:
    return "\n\n".join(format_document(h.unit_id, h.text) for h in hits)


def dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)
