"""Experiment configuration (TOML for humans, JSON mirror for scripts)."""

from __future__ import annotations

import enum
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .datasets import Dataset
from .errors import ConfigError


def read_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    try:
        if path.suffix == ".json":
            return json.loads(raw)
        return tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e


class Method(str, enum.Enum):
    FULL_CONTEXT = "full_context"
    RAG = "rag"
    REACT = "react"
    CODING_AGENT = "coding_agent"


class RetrieverKind(str, enum.Enum):
    NONE = "none"
    BM25 = "bm25"
    DENSE = "dense"


@dataclass
class Budgets:
    max_steps: int = 30
    agent_timeout_s: float = 1800.0
    context_token_budget: int = 100_000
    window_tokens: int = 200_000
    window_overlap: int = 50_000

    def __post_init__(self):
        if self.max_steps < 1 or self.agent_timeout_s <= 0 or self.context_token_budget < 1:
            raise ConfigError("budgets must be positive")
        if not 0 <= self.window_overlap < self.window_tokens:
            raise ConfigError("window_overlap must be in [0, window_tokens)")


@dataclass
class ExperimentConfig:
    dataset: Dataset
    method: Method
    model: str
    retriever: RetrieverKind = RetrieverKind.NONE
    embedding_model: str | None = None
    judge_model: str | None = None
    seed: int = 0
    sample_n: int = 200
    workers: int = 4
    top_k: int = 10
    budgets: Budgets = field(default_factory=Budgets)
    agent_command: list[str] | None = None
    agent_name: str = "Coding Agent"
    data_dir: Path = Path("data")
    runs_dir: Path = Path("runs")
    run_name: str | None = None
    prices: Path | None = None

    def __post_init__(self):
        if self.sample_n < 1 or self.workers < 1 or self.top_k < 1:
            raise ConfigError("sample_n, workers and top_k must be positive")
        if self.retriever is RetrieverKind.DENSE and not self.embedding_model:
            raise ConfigError("retriever = dense needs embedding_model")
        if self.method is Method.CODING_AGENT and not self.agent_command:
            raise ConfigError("method = coding_agent needs agent_command")
        if self.method in (Method.RAG, Method.REACT) and self.retriever is RetrieverKind.NONE:
            raise ConfigError(f"method = {self.method.value} needs a retriever (bm25 or dense)")
        if self.method is Method.FULL_CONTEXT and self.retriever is not RetrieverKind.NONE:
            raise ConfigError("method = full_context takes no retriever")

    @property
    def retriever_model(self) -> str:
        """Value passed as ``--embedding-model`` to the retriever tool."""
        if self.retriever is RetrieverKind.DENSE:
            assert self.embedding_model is not None
            return self.embedding_model
        return "BM25"

    @property
    def label(self) -> str:
        """Row label in result tables."""
        if self.method is Method.FULL_CONTEXT:
            return f"{self.model} Full Context"
        if self.method is Method.RAG:
            return "RAG" if self.retriever is RetrieverKind.DENSE else "RAG + BM25"
        if self.method is Method.REACT:
            return "ReAct Agent" if self.retriever is RetrieverKind.DENSE else "ReAct Agent + BM25"
        if self.retriever is RetrieverKind.NONE:
            return f"{self.agent_name} (No Retriever)"
        return f"{self.agent_name} + {self.retriever_model}"

    @property
    def slug(self) -> str:
        if self.method is Method.FULL_CONTEXT:
            return self.method.value
        return f"{self.method.value}-{self.retriever.value}"

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> ExperimentConfig:
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            d["dataset"] = Dataset(d["dataset"])
            d["method"] = Method(d["method"])
            d["retriever"] = RetrieverKind(str(d.get("retriever", "none")).lower())
            budgets = d.get("budgets", {})
            d["budgets"] = Budgets(**budgets) if isinstance(budgets, dict) else budgets
        except KeyError as e:
            raise ConfigError(f"missing config key {e.args[0]!r}") from None
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e)) from None
        if "model" not in d:
            raise ConfigError("missing config key 'model'")
        for key in ("data_dir", "runs_dir", "prices"):
            if d.get(key) is not None:
                p = Path(d[key])
                d[key] = p if p.is_absolute() or base_dir is None else base_dir / p
        if isinstance(d.get("agent_command"), str):
            raise ConfigError("agent_command must be a list of argv strings")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        return cls.from_dict(read_config_file(path), base_dir=path.resolve().parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, enum.Enum):
                d[k] = v.value
            elif isinstance(v, Path):
                d[k] = str(v)
        return {k: v for k, v in d.items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
