"""End-to-end orchestration behind the ``fsnav`` subcommands."""

from __future__ import annotations

import json
import logging
import shutil
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

from .config import ExperimentConfig, Method, RetrieverKind
from .corpus import CorpusManifest, Layout, ingest_jsonl, materialize_folder, materialize_jsonl, materialize_single_doc, materialize_single_json
from .datasets import HEADER_SUFFIX, DataRoot, Dataset, DatasetStore, Question, iter_questions, write_questions
from .errors import ConfigError, EmptyInput, FsnavError
from .evaluator import EvalOutcome, load_or_create_sample, scorer_for, mean_score, read_outcomes, score_answer, write_outcomes
from .gateway.types import PriceTable, TokenUsage, cost
from .report import Table, command_usage_table, cost_table, native_search_table, results_table, strategy_table
from .retriever.index import build_all, dense_store_path, sparse_index_dir
from .runners.base import RunEnv, RunResult
from .runners.coding_agent import run_coding_agent
from .runners.full_context import run_full_context
from .runners.rag import run_rag
from .runners.react import run_react
from .trace import LogicalClock, TrajectoryRecorder, command_usage_stats, native_search_count, parse_trajectory, strategy_stats

logger = logging.getLogger(__name__)

CONFIG_NAME = "config.json"
RESULTS_NAME = "results.jsonl"
EVAL_NAME = "eval.jsonl"
SUMMARY_NAME = "summary.json"
FAILURES_NAME = "failures.json"
SAMPLES_DIR = "samples"


# ---------------------------------------------------------------------------
# ingest / index


@dataclass
class IngestReport:
    dataset: Dataset
    root: Path
    units: int
    questions: int
    skipped: bool = False
    manifest: CorpusManifest | None = None


def ingest_dataset(
    data_root: DataRoot,
    dataset: Dataset,
    questions: str | Path,
    *,
    corpus: str | Path | None = None,
    contexts: str | Path | None = None,
    layout: Layout = Layout.FOLDER,
    force: bool = False,
    workers: int = 4,
) -> IngestReport:
    """Materialize a dataset under the data root. A completed earlier ingest is left untouched."""
    store = data_root.store(dataset)
    done = store.questions_path.exists() and (
        store.contexts_dir.is_dir() if dataset.is_long_doc else (store.root / "manifest.json").exists()
    )
    if done and not force:
        qs = sum(1 for _ in iter_questions(store.questions_path, dataset))
        units = len(store.datapoint_ids()) if dataset.is_long_doc else store.manifest().doc_count
        return IngestReport(dataset, store.root, units, qs, skipped=True)
    if store.root.exists():
        shutil.rmtree(store.root)
    store.root.mkdir(parents=True)

    manifest = None
    if dataset.is_long_doc:
        if contexts is None:
            raise ConfigError(f"{dataset.value} needs --contexts (JSONL of datapoint id, text and optional header)")
        store.contexts_dir.mkdir()
        units = 0
        for doc in ingest_jsonl(contexts, title_field="header", allow_empty_text=True):
            materialize_single_doc(doc.text, store.contexts_dir / f"{doc.id}.txt", header=doc.title, persist=False)
            if doc.title:
                (store.contexts_dir / f"{doc.id}{HEADER_SUFFIX}").write_text(doc.title, encoding="utf-8")
            units += 1
    else:
        if corpus is None:
            raise ConfigError(f"{dataset.value} needs --corpus (JSONL of id, text and optional title)")
        name = dataset.value
        if layout is Layout.FOLDER:
            manifest = materialize_folder(ingest_jsonl(corpus), store.root / "corpus", name=name, workers=workers)
        elif layout is Layout.SINGLE_JSON:
            manifest = materialize_single_json(ingest_jsonl(corpus), store.root / "corpus.json", name=name)
        elif layout is Layout.JSONL:
            manifest = materialize_jsonl(corpus, store.root / "corpus.jsonl", name=name)
        else:
            raise ConfigError("corpus datasets use the folder, single_json or jsonl layout")
        units = manifest.doc_count

    qs = list(iter_questions(questions, dataset))
    if dataset.is_long_doc:
        known = set(store.datapoint_ids())
        missing = sorted({q.datapoint_id for q in qs if q.datapoint_id not in known})
        if missing:
            raise ConfigError(f"questions refer to unknown datapoints: {missing[:5]}")
    write_questions(store.questions_path, qs)
    if store.root.resolve() != (data_root.path / dataset.value).resolve():
        data_root.register(dataset, store.root)
    return IngestReport(dataset, store.root, units, len(qs), manifest=manifest)


def index_dataset(data_root: DataRoot, dataset: Dataset, model: str, embedder=None) -> int:
    return build_all(data_root.store(dataset), model, embedder)


# ---------------------------------------------------------------------------
# run


@dataclass
class RunReport:
    run_dir: Path
    completed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failed: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failed


def new_run_dir(cfg: ExperimentConfig) -> Path:
    name = cfg.run_name or time.strftime("%Y%m%d-%H%M%S")
    return cfg.runs_dir / cfg.dataset.value / cfg.slug / name


def read_results(run_dir: Path) -> list[RunResult]:
    path = run_dir / RESULTS_NAME
    if not path.exists():
        return []
    with open(path, encoding="utf-8") as f:
        return [RunResult.from_dict(json.loads(line)) for line in f if line.strip()]


def load_run_config(run_dir: Path) -> ExperimentConfig:
    path = Path(run_dir) / CONFIG_NAME
    if not path.exists():
        raise ConfigError(f"{run_dir} is not a run directory (no {CONFIG_NAME})")
    return ExperimentConfig.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _check_indexes(cfg: ExperimentConfig, store: DatasetStore, questions: list[Question]) -> None:
    if cfg.method not in (Method.RAG, Method.REACT):
        return
    dps = sorted({q.datapoint_id for q in questions}) if store.dataset.is_long_doc else [None]
    for dp in dps:
        if cfg.retriever is RetrieverKind.BM25:
            path = sparse_index_dir(store, dp) / "meta.json"
        else:
            path = dense_store_path(store, cfg.retriever_model, dp)
        if not path.exists():
            raise ConfigError(f"{cfg.method.value} needs a {cfg.retriever_model} index at {path.parent}; run `fsnav index`")


def run_one(cfg: ExperimentConfig, env: RunEnv, q: Question) -> RunResult:
    b = cfg.budgets
    if cfg.method is Method.FULL_CONTEXT:
        return run_full_context(
            q, env, window=b.window_tokens, overlap=b.window_overlap, budget_tokens=b.context_token_budget
        )
    if cfg.method is Method.RAG:
        return run_rag(q, env, cfg.retriever_model, k=cfg.top_k)
    if cfg.method is Method.REACT:
        return run_react(q, env, cfg.retriever_model, max_steps=b.max_steps)
    assert cfg.agent_command is not None
    retriever = None if cfg.retriever is RetrieverKind.NONE else cfg.retriever_model
    return run_coding_agent(q, env, cfg.agent_command, retriever, timeout_s=b.agent_timeout_s)


def run_experiment(
    cfg: ExperimentConfig,
    *,
    gateway=None,
    run_dir: Path | None = None,
    deterministic: bool = False,
    extra_env: dict[str, str] | None = None,
) -> RunReport:
    """Run every sampled question not already completed in ``run_dir``."""
    data_root = DataRoot(cfg.data_dir)
    store = data_root.store(cfg.dataset)
    questions = {q.id: q for q in store.questions()}
    sample = load_or_create_sample(store.root / SAMPLES_DIR, cfg.dataset, list(questions), cfg.sample_n, cfg.seed)
    sampled = [questions[i] for i in sample]
    if cfg.method is not Method.CODING_AGENT and gateway is None:
        raise ConfigError(f"{cfg.method.value} needs a model endpoint")
    _check_indexes(cfg, store, sampled)

    run_dir = Path(run_dir) if run_dir else new_run_dir(cfg)
    run_dir.mkdir(parents=True, exist_ok=True)
    snapshot = run_dir / CONFIG_NAME
    if snapshot.exists():
        previous = json.loads(snapshot.read_text(encoding="utf-8"))
        if previous != json.loads(cfg.to_json()):
            raise ConfigError(f"{run_dir} was started with a different config")
    else:
        snapshot.write_text(cfg.to_json() + "\n", encoding="utf-8")
    shutil.copyfile(
        store.root / SAMPLES_DIR / f"{cfg.dataset.value}.sample.{cfg.seed}.json",
        run_dir / f"{cfg.dataset.value}.sample.{cfg.seed}.json",
    )

    done = {r.question_id: r for r in read_results(run_dir) if r.ok}
    report = RunReport(run_dir, skipped=[q.id for q in sampled if q.id in done])
    todo = [q for q in sampled if q.id not in done]
    env = RunEnv(
        store=store,
        model=cfg.model,
        run_dir=run_dir,
        method=cfg.label,
        gateway=gateway,
        data_root=data_root,
        deterministic=deterministic,
        seed=cfg.seed,
        extra_env=dict(extra_env or {}),
    )
    results = dict(done)
    lock = threading.Lock()
    results_path = run_dir / RESULTS_NAME

    def record(r: RunResult) -> None:
        with lock:
            results[r.question_id] = r
            with open(results_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")

    def work(q: Question) -> None:
        try:
            r = run_one(cfg, env, q)
        except FsnavError as e:
            logger.error("question %s failed: %s", q.id, e)
            report.failed[q.id] = str(e)
            r = RunResult(q.id, cfg.label, "", env.trajectory_rel(q.id), TokenUsage(), 0.0, cfg.model,
                          cfg.dataset.value, error=str(e))
            if not (run_dir / r.trajectory_path).exists():
                TrajectoryRecorder(run_dir / r.trajectory_path)
        record(r)
        if r.ok:
            report.completed.append(q.id)

    if cfg.workers == 1:
        for q in todo:
            work(q)
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            for fut in as_completed([pool.submit(work, q) for q in todo]):
                fut.result()

    # Rewrite in sample order so the file is independent of completion order.
    with open(results_path, "w", encoding="utf-8") as f:
        for q in sampled:
            if q.id in results:
                f.write(json.dumps(results[q.id].to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    failures = run_dir / FAILURES_NAME
    if report.failed:
        failures.write_text(json.dumps(report.failed, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    elif failures.exists():
        failures.unlink()
    return report


# ---------------------------------------------------------------------------
# eval


@dataclass
class EvalSummary:
    label: str
    dataset: Dataset
    metric: float
    n: int
    outcomes: list[EvalOutcome]

    def to_dict(self) -> dict:
        return {"label": self.label, "dataset": self.dataset.value, "metric": self.metric, "n": self.n}


def evaluate_run(
    run_dir: str | Path, *, gateway=None, judge_model: str | None = None, deterministic: bool = False
) -> EvalSummary:
    run_dir = Path(run_dir)
    cfg = load_run_config(run_dir)
    results = read_results(run_dir)
    if not results:
        raise EmptyInput(f"no results in {run_dir}")
    store = DataRoot(cfg.data_dir).store(cfg.dataset)
    questions = {q.id: q for q in store.questions()}
    judge_model = judge_model or cfg.judge_model
    outcomes = []
    for r in results:
        q = questions[r.question_id]
        if not r.ok:
            outcomes.append(EvalOutcome(q.id, 0.0, scorer_for(q.dataset, q.gold), ["run_error"]))
            continue
        recorder = None
        if gateway is not None:
            stem = r.trajectory_path.rsplit("/", 1)[-1]
            recorder = TrajectoryRecorder(
                run_dir / "judge" / stem,
                request_log=run_dir / "judge" / f"requests-{stem}",
                clock=LogicalClock() if deterministic else None,
            )
        outcomes.append(score_answer(q, r.answer_text, gateway=gateway, judge_model=judge_model, recorder=recorder))
    write_outcomes(run_dir / EVAL_NAME, outcomes)
    summary = EvalSummary(cfg.label, cfg.dataset, mean_score(outcomes), len(outcomes), outcomes)
    (run_dir / SUMMARY_NAME).write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


def load_summary(run_dir: Path) -> EvalSummary:
    path = Path(run_dir) / SUMMARY_NAME
    if not path.exists():
        raise ConfigError(f"{run_dir} has not been evaluated; run `fsnav eval` first")
    d = json.loads(path.read_text(encoding="utf-8"))
    return EvalSummary(d["label"], Dataset(d["dataset"]), float(d["metric"]), int(d["n"]), read_outcomes(Path(run_dir) / EVAL_NAME))


# ---------------------------------------------------------------------------
# analyze / report


def _run_key(cfg: ExperimentConfig, all_datasets: set[Dataset]) -> str:
    return cfg.label if len(all_datasets) == 1 else f"{cfg.label} [{cfg.dataset.title}]"


def analyze_runs(
    run_dirs: list[str | Path],
    out_dir: str | Path,
    *,
    prices: PriceTable | None = None,
    include_retriever_reads: bool = False,
) -> dict[str, Table]:
    """Command usage, native search, strategy metrics and (given prices) cost tables."""
    if not run_dirs:
        raise EmptyInput("no run directories")
    runs = []
    for d in run_dirs:
        d = Path(d)
        cfg = load_run_config(d)
        results = [r for r in read_results(d) if r.ok]
        trajs = [parse_trajectory(d / r.trajectory_path) for r in results]
        runs.append((cfg, results, trajs))
    datasets = {cfg.dataset for cfg, _, _ in runs}

    usage, native, strategy, costs = {}, {}, {}, {}
    for cfg, results, trajs in runs:
        if not trajs:
            continue
        key = _run_key(cfg, datasets)
        usage[key] = command_usage_stats(trajs)
        native[key] = sum(native_search_count(t) for t in trajs) / len(trajs)
        strategy[(cfg.label, cfg.dataset)] = strategy_stats(trajs, include_retriever=include_retriever_reads)
        if prices is not None:
            costs[(cfg.label, cfg.dataset)] = sum(cost(r.usage, r.model, prices) for r in results) / len(results)

    tables = {
        "command_usage": command_usage_table(usage),
        "native_search": native_search_table(native),
        "strategy": strategy_table(strategy),
    }
    if prices is not None:
        tables["cost"] = cost_table(costs)
    for stem, table in tables.items():
        table.save(out_dir, stem)
    return tables


def report_runs(run_dirs: list[str | Path], out_dir: str | Path) -> Table:
    """Benchmark results table (methods by datasets) from evaluated runs."""
    if not run_dirs:
        raise EmptyInput("no run directories")
    scores = {}
    for d in run_dirs:
        s = load_summary(Path(d))
        scores[(s.label, s.dataset)] = s.metric
    table = results_table(scores)
    table.save(out_dir, "results")
    return table
