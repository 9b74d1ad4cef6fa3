"""Offline end-to-end scenario over the 20-document fixture in ``data/e2e``.

Everything runs through ``fsnav.cli.main`` with the mock model endpoint and
the scripted mock agent, so the whole pipeline is exercised without network.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from fsnav.cli import main
from fsnav.config import ExperimentConfig
from fsnav.gateway.mock import hash_embedding
from fsnav.pipeline import new_run_dir
from oracles import oracle_bm25, oracle_cosine, oracle_ranking

DATA = Path(__file__).parent / "data" / "e2e"
DATASET = "browsecomp-plus"
MODEL = "mock-llm"
EMBED = "mock-embed"
EMBED_DIM = 256
RAG_K = 10
REACT_K = 3


def fixture_docs() -> dict[str, str]:
    rows = [json.loads(line) for line in (DATA / "corpus.jsonl").read_text().splitlines() if line.strip()]
    return {r["id"]: r["text"] for r in rows}


def fixture_questions() -> list[dict]:
    return [json.loads(line) for line in (DATA / "questions.jsonl").read_text().splitlines() if line.strip()]


def _hit_rate(rankings: dict[str, list[str]], k: int) -> float:
    qs = fixture_questions()
    return 100.0 * sum(q["meta"]["gold_doc"] in rankings[q["id"]][:k] for q in qs) / len(qs)


def expected_scores() -> dict[str, float]:
    """Scores implied by the mock rules, with retrieval outcomes taken from the oracles.

    The mock model answers RAG correctly iff the gold document is among the top
    ``RAG_K`` retrieved, ReAct iff it is in the top ``REACT_K``. Full context is
    scripted to solve the first two questions; the folder agent without a
    retriever misses q5.
    """
    docs = fixture_docs()
    qs = fixture_questions()
    bm25 = {q["id"]: oracle_ranking(oracle_bm25(docs, q["question"]), len(docs)) for q in qs}
    vecs = {d: hash_embedding(t, EMBED_DIM) for d, t in docs.items()}
    dense = {}
    for q in qs:
        cos = oracle_cosine(vecs, hash_embedding(q["question"], EMBED_DIM))
        dense[q["id"]] = sorted(cos, key=lambda d: (-cos[d], d))
    return {
        f"{MODEL} Full Context": 40.0,
        "RAG + BM25": _hit_rate(bm25, RAG_K),
        "RAG": _hit_rate(dense, RAG_K),
        "ReAct Agent + BM25": _hit_rate(bm25, REACT_K),
        "ReAct Agent": _hit_rate(dense, REACT_K),
        "Coding Agent (No Retriever)": 80.0,
        "Coding Agent + BM25": 100.0,
        f"Coding Agent + {EMBED}": 100.0,
        "Single File Agent (No Retriever)": 100.0,
    }


@dataclass
class Scenario:
    root: Path
    data_dir: Path
    single_dir: Path
    runs_dir: Path
    out_dir: Path
    run_dirs: dict[str, Path] = field(default_factory=dict)
    exit_codes: list[tuple[str, int]] = field(default_factory=list)

    @property
    def mock(self) -> list[str]:
        return ["--mock", str(DATA / "llm.json")]

    def cli(self, *argv: str) -> int:
        code = main([*self.mock, *argv])
        self.exit_codes.append((" ".join(argv[:2]), code))
        return code


def agent_command() -> list[str]:
    return [sys.executable, "-m", "fsnav.mock_agent", "--workspace", "{workspace}", "--prompt-file", "{prompt_file}",
            "--script", str(DATA / "agent.json")]


def configs(s: Scenario) -> dict[str, dict]:
    base = {"dataset": DATASET, "model": MODEL, "judge_model": "mock-judge", "sample_n": 200, "seed": 0,
            "workers": 2, "data_dir": str(s.data_dir), "runs_dir": str(s.runs_dir), "run_name": "e2e"}
    agent = {**base, "method": "coding_agent", "agent_command": agent_command()}
    return {
        "full_context": {**base, "method": "full_context"},
        "rag-bm25": {**base, "method": "rag", "retriever": "bm25", "top_k": RAG_K},
        "rag-dense": {**base, "method": "rag", "retriever": "dense", "embedding_model": EMBED, "top_k": RAG_K},
        "react-bm25": {**base, "method": "react", "retriever": "bm25"},
        "react-dense": {**base, "method": "react", "retriever": "dense", "embedding_model": EMBED},
        "agent-none": {**agent, "retriever": "none"},
        "agent-bm25": {**agent, "retriever": "bm25"},
        "agent-dense": {**agent, "retriever": "dense", "embedding_model": EMBED},
        "agent-single": {**agent, "retriever": "none", "agent_name": "Single File Agent", "data_dir": str(s.single_dir),
                         "runs_dir": str(s.root / "runs-single")},
    }


def ingest_and_index(s: Scenario) -> None:
    common = ["--dataset", DATASET, "--questions", str(DATA / "questions.jsonl"), "--corpus", str(DATA / "corpus.jsonl")]
    s.cli("ingest", "--data-dir", str(s.data_dir), *common)
    s.cli("ingest", "--data-dir", str(s.single_dir), *common, "--layout", "single_json")
    s.cli("index", "--data-dir", str(s.data_dir), "--dataset", DATASET, "--embedding-model", "BM25")
    s.cli("index", "--data-dir", str(s.data_dir), "--dataset", DATASET, "--embedding-model", EMBED)


def run_all(s: Scenario) -> None:
    cfg_dir = s.root / "configs"
    cfg_dir.mkdir(exist_ok=True)
    for name, cfg in configs(s).items():
        path = cfg_dir / f"{name}.json"
        path.write_text(json.dumps(cfg, indent=2))
        s.cli("run", str(path))
        s.run_dirs[name] = new_run_dir(ExperimentConfig.from_dict(cfg))


def evaluate_and_analyze(s: Scenario) -> None:
    dirs = [str(d) for d in s.run_dirs.values()]
    s.cli("eval", *dirs)
    s.cli("report", *dirs, "--out", str(s.out_dir))
    agents = [str(s.run_dirs[k]) for k in ("agent-none", "agent-bm25", "agent-dense")]
    s.cli("analyze", *agents, "--out", str(s.out_dir / "retrievers"), "--prices", str(DATA / "prices.json"))
    s.cli("analyze", str(s.run_dirs["agent-single"]), str(s.run_dirs["agent-none"]), "--out", str(s.out_dir / "structure"))


def run_scenario(root: Path) -> Scenario:
    s = Scenario(root, root / "data", root / "data-single", root / "runs", root / "out")
    ingest_and_index(s)
    run_all(s)
    evaluate_and_analyze(s)
    return s


def scores(s: Scenario) -> dict[str, float]:
    out = {}
    for d in s.run_dirs.values():
        summary = json.loads((d / "summary.json").read_text())
        out[summary["label"]] = summary["metric"]
    return out


def snapshot(s: Scenario) -> dict[str, str]:
    """Every output file that must be identical across repeated runs."""
    files = {}
    for name, d in s.run_dirs.items():
        for p in sorted(d.rglob("*")):
            if p.is_file() and p.suffix in (".jsonl", ".json", ".txt") and "agent_logs" not in p.parts:
                files[f"{name}/{p.relative_to(d)}"] = p.read_text().replace(str(s.root), "<root>")
    for p in sorted(s.out_dir.rglob("*")):
        if p.is_file():
            files[f"out/{p.relative_to(s.out_dir)}"] = p.read_text()
    return files
