"""Benchmark datasets, questions and the on-disk data layout.

A data directory holds one sub-directory per dataset::

    <data_dir>/<dataset>/
        questions.jsonl           canonical question records
        manifest.json             corpus datasets: manifest of the corpus
        corpus/ | corpus.json | corpus.jsonl
        contexts/<datapoint>.txt  long-document datasets: one file per context
        contexts/<datapoint>.header  optional description header already at the top of the .txt
        .index/                   retrieval indexes

``<data_dir>/registry.json`` may map dataset names to directories elsewhere.
"""

from __future__ import annotations

import enum
import json
import math
import os
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import CorpusManifest, CorpusReader, load_manifest
from .errors import ConfigError, MalformedLine

REGISTRY_NAME = "registry.json"
QUESTIONS_NAME = "questions.jsonl"
CONTEXTS_DIR = "contexts"
HEADER_SUFFIX = ".header"


class Dataset(str, enum.Enum):
    BROWSECOMP_PLUS = "browsecomp-plus"
    OOLONG_SYNTHETIC = "oolong_synthetic"
    OOLONG_REAL = "oolong_real"
    LONGBENCH = "longbench"
    NQ = "nq"

    @property
    def is_long_doc(self) -> bool:
        """One long context per question rather than a shared document corpus."""
        return self in (Dataset.OOLONG_SYNTHETIC, Dataset.OOLONG_REAL, Dataset.LONGBENCH)

    @property
    def is_oolong(self) -> bool:
        return self in (Dataset.OOLONG_SYNTHETIC, Dataset.OOLONG_REAL)

    @property
    def title(self) -> str:
        return _TITLES[self]


_TITLES = {
    Dataset.BROWSECOMP_PLUS: "BrowseComp-Plus",
    Dataset.OOLONG_SYNTHETIC: "Oolong-Syn",
    Dataset.OOLONG_REAL: "Oolong-Real",
    Dataset.LONGBENCH: "LongBench",
    Dataset.NQ: "NQ",
}

# Column order of result tables.
DATASET_ORDER = list(Dataset)


class AnswerKind(str, enum.Enum):
    FREEFORM = "freeform"
    MCQ_LETTER = "mcq"
    NUMERIC = "numeric"
    LABEL = "label"


LETTERS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class GoldAnswer:
    kind: AnswerKind
    value: str | float
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind is AnswerKind.MCQ_LETTER and self.value not in LETTERS:
            raise ValueError(f"MCQ gold must be one of A-D, got {self.value!r}")
        if self.kind is AnswerKind.NUMERIC:
            if isinstance(self.value, bool) or not isinstance(self.value, (int, float)) or not math.isfinite(self.value):
                raise ValueError(f"numeric gold must be a finite number, got {self.value!r}")

    @property
    def strings(self) -> list[str]:
        """All acceptable surface forms (value first)."""
        v = self.value
        head = str(int(v)) if isinstance(v, float) and v.is_integer() else str(v)
        return [head, *self.aliases]


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    gold: GoldAnswer
    dataset: Dataset
    choices: tuple[str, str, str, str] | None = None
    datapoint_id: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if (self.choices is not None) != (self.dataset is Dataset.LONGBENCH):
            raise ValueError("choices are required for LongBench questions and only for them")
        if self.choices is not None and len(self.choices) != 4:
            raise ValueError("LongBench questions have exactly four choices")
        if self.dataset.is_long_doc and not self.datapoint_id:
            raise ValueError(f"{self.dataset.value} questions need a datapoint_id")

    @property
    def context_ref(self) -> str:
        return self.datapoint_id if self.datapoint_id is not None else self.dataset.value

    def to_dict(self) -> dict:
        d: dict = {"id": self.id, "question": self.text, "answer": self.gold.value, "answer_kind": self.gold.kind.value}
        if self.gold.aliases:
            d["aliases"] = list(self.gold.aliases)
        if self.choices is not None:
            d["choices"] = list(self.choices)
        if self.datapoint_id is not None:
            d["datapoint_id"] = self.datapoint_id
        if self.meta:
            d["meta"] = self.meta
        return d


def _default_kind(dataset: Dataset, answer) -> AnswerKind:
    if dataset is Dataset.LONGBENCH:
        return AnswerKind.MCQ_LETTER
    if dataset.is_oolong:
        return AnswerKind.NUMERIC if isinstance(answer, (int, float)) and not isinstance(answer, bool) else AnswerKind.LABEL
    return AnswerKind.FREEFORM


def question_from_dict(d: dict, dataset: Dataset) -> Question:
    answer = d["answer"]
    aliases: list[str] = [str(a) for a in d.get("aliases", [])]
    if isinstance(answer, list):
        if not answer:
            raise ValueError("empty answer list")
        answer, aliases = answer[0], [str(a) for a in answer[1:]] + aliases
    kind = AnswerKind(d["answer_kind"]) if d.get("answer_kind") else _default_kind(dataset, answer)
    if kind is AnswerKind.NUMERIC:
        answer = float(answer)
    elif kind is AnswerKind.MCQ_LETTER:
        answer = str(answer).strip().strip("()").upper()
    else:
        answer = str(answer)
    choices = d.get("choices")
    if isinstance(choices, dict):
        choices = [choices[k] for k in LETTERS]
    dp = d.get("datapoint_id")
    return Question(
        id=str(d["id"]),
        text=d["question"],
        gold=GoldAnswer(kind, answer, tuple(aliases)),
        dataset=dataset,
        choices=tuple(choices) if choices is not None else None,
        datapoint_id=str(dp) if dp is not None else None,
        meta=d.get("meta", {}),
    )


def iter_questions(path: str | os.PathLike, dataset: Dataset) -> Iterator[Question]:
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield question_from_dict(json.loads(line), dataset)
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise MalformedLine(line_no, str(e)) from None


def write_questions(path: str | os.PathLike, questions: list[Question]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for q in questions:
            f.write(json.dumps(q.to_dict(), ensure_ascii=False) + "\n")


@dataclass
class DatasetStore:
    """Paths and lazy readers for one ingested dataset."""

    dataset: Dataset
    root: Path

    @property
    def questions_path(self) -> Path:
        return self.root / QUESTIONS_NAME

    @property
    def index_dir(self) -> Path:
        return self.root / ".index"

    @property
    def contexts_dir(self) -> Path:
        return self.root / CONTEXTS_DIR

    def questions(self) -> list[Question]:
        if not self.questions_path.exists():
            raise ConfigError(f"dataset {self.dataset.value} has no {QUESTIONS_NAME} under {self.root}")
        return list(iter_questions(self.questions_path, self.dataset))

    def manifest(self) -> CorpusManifest:
        if self.dataset.is_long_doc:
            raise ConfigError(f"{self.dataset.value} is a long-document dataset without a shared corpus")
        return load_manifest(self.root)

    def reader(self) -> CorpusReader:
        return CorpusReader(self.manifest())

    def context_path(self, datapoint_id: str) -> Path:
        path = self.contexts_dir / f"{datapoint_id}.txt"
        if not path.is_file():
            raise KeyError(f"unknown datapoint {datapoint_id!r} for {self.dataset.value}")
        return path

    def context(self, datapoint_id: str) -> str:
        return self.context_path(datapoint_id).read_text(encoding="utf-8")

    def header(self, datapoint_id: str) -> str | None:
        """Description header that was prepended to a context at ingestion, if any."""
        path = self.contexts_dir / f"{datapoint_id}{HEADER_SUFFIX}"
        return path.read_text(encoding="utf-8") if path.is_file() else None

    def datapoint_ids(self) -> list[str]:
        return sorted(p.stem for p in self.contexts_dir.glob("*.txt"))

    def corpus_location(self, q: Question) -> Path:
        """File or directory an agent is pointed at for question ``q``."""
        if self.dataset.is_long_doc:
            assert q.datapoint_id is not None
            return self.context_path(q.datapoint_id)
        return self.manifest().root


class DataRoot:
    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)

    def _registry(self) -> dict[str, str]:
        reg = self.path / REGISTRY_NAME
        if not reg.exists():
            return {}
        return json.loads(reg.read_text(encoding="utf-8"))

    def register(self, dataset: Dataset, directory: Path) -> None:
        reg = self._registry()
        reg[dataset.value] = str(Path(directory).resolve())
        self.path.mkdir(parents=True, exist_ok=True)
        (self.path / REGISTRY_NAME).write_text(json.dumps(reg, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def store(self, dataset: Dataset | str) -> DatasetStore:
        dataset = Dataset(dataset)
        override = self._registry().get(dataset.value)
        return DatasetStore(dataset, Path(override) if override else self.path / dataset.value)
