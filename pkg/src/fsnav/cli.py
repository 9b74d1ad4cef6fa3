"""``fsnav`` command line: ingest, index, retrieve, run, eval, analyze, report.

Exit codes: 0 success, 1 partial failure, 2 usage error, 3 config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import ExperimentConfig
from .corpus import Layout
from .datasets import DataRoot, Dataset
from .errors import ConfigError, FsnavError
from .gateway import Gateway, MockTransport, PriceTable, gateway_from_env

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsnav", description=__doc__.split("\n")[0])
    p.add_argument("--mock", type=Path, metavar="FIXTURE", help="answer model calls from a mock fixture (offline)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="materialize a dataset under the data directory")
    s.add_argument("--data-dir", type=Path, required=True)
    s.add_argument("--dataset", required=True, choices=[d.value for d in Dataset])
    s.add_argument("--questions", type=Path, required=True, help="questions JSONL")
    s.add_argument("--corpus", type=Path, help="corpus JSONL (id, text, title?)")
    s.add_argument("--contexts", type=Path, help="long-document contexts JSONL (id, text, header?)")
    s.add_argument("--layout", default="folder", choices=["folder", "single_json", "jsonl"])
    s.add_argument("--workers", type=int, default=4)
    s.add_argument("--force", action="store_true", help="rebuild even if already ingested")

    s = sub.add_parser("index", help="build retrieval indexes")
    s.add_argument("--data-dir", type=Path, required=True)
    s.add_argument("--dataset", required=True, choices=[d.value for d in Dataset])
    s.add_argument("--embedding-model", nargs="+", default=["BM25"], help="BM25 or an embedding model name")

    # Arguments after ``retrieve`` are split off before parsing and handed to retriever.py as-is.
    sub.add_parser("retrieve", help="query an index (same flags as retriever.py)", add_help=False)

    s = sub.add_parser("run", help="run one experiment config")
    s.add_argument("config", type=Path, help="experiment config (.toml or .json)")
    s.add_argument("--run-dir", type=Path, help="resume or write into this directory")
    s.add_argument("--workers", type=int)

    s = sub.add_parser("eval", help="score a finished run")
    s.add_argument("run_dirs", type=Path, nargs="+")
    s.add_argument("--judge-model")

    s = sub.add_parser("analyze", help="trajectory analytics across runs")
    s.add_argument("run_dirs", type=Path, nargs="+")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--prices", type=Path, help="price table (.toml or .json) for cost per query")
    s.add_argument("--include-retriever-reads", action="store_true")

    s = sub.add_parser("report", help="benchmark results table from evaluated runs")
    s.add_argument("run_dirs", type=Path, nargs="+")
    s.add_argument("--out", type=Path, required=True)
    return p


def _gateway(args) -> Gateway:
    if args.mock:
        return Gateway(MockTransport.from_file(args.mock), backoff_base_s=0.0)
    return gateway_from_env()


def _mock_env(args) -> dict[str, str]:
    return {"FSNAV_MOCK": str(args.mock.resolve())} if args.mock else {}


def _cmd_ingest(args) -> int:
    from .pipeline import ingest_dataset

    rep = ingest_dataset(
        DataRoot(args.data_dir),
        Dataset(args.dataset),
        args.questions,
        corpus=args.corpus,
        contexts=args.contexts,
        layout=Layout(args.layout),
        force=args.force,
        workers=args.workers,
    )
    state = "already ingested" if rep.skipped else "ingested"
    print(f"{rep.dataset.value}: {state}: {rep.units} units, {rep.questions} questions at {rep.root}")
    return EXIT_OK


def _cmd_index(args) -> int:
    from .pipeline import index_dataset
    from .retriever.index import is_sparse

    model = " ".join(args.embedding_model)
    embedder = None if is_sparse(model) else _gateway(args)
    n = index_dataset(DataRoot(args.data_dir), Dataset(args.dataset), model, embedder)
    print(f"{args.dataset}: built {n} {model} index(es)")
    return EXIT_OK


def _cmd_run(args) -> int:
    from .pipeline import run_experiment

    cfg = ExperimentConfig.load(args.config)
    if args.workers:
        cfg.workers = args.workers
    rep = run_experiment(
        cfg,
        gateway=_gateway(args),
        run_dir=args.run_dir,
        deterministic=args.mock is not None,
        extra_env=_mock_env(args),
    )
    print(f"{rep.run_dir}: {len(rep.completed)} completed, {len(rep.skipped)} already done, {len(rep.failed)} failed")
    for qid, err in sorted(rep.failed.items()):
        print(f"  failed {qid}: {err}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_PARTIAL


def _cmd_eval(args) -> int:
    from .pipeline import evaluate_run

    gateway = _gateway(args)
    for d in args.run_dirs:
        s = evaluate_run(d, gateway=gateway, judge_model=args.judge_model, deterministic=args.mock is not None)
        print(f"{s.label} on {s.dataset.title}: {s.metric:.2f} over {s.n} questions")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    from .pipeline import analyze_runs

    prices = PriceTable.load(args.prices) if args.prices else None
    tables = analyze_runs(args.run_dirs, args.out, prices=prices, include_retriever_reads=args.include_retriever_reads)
    for t in tables.values():
        print(t.to_text())
    return EXIT_OK


def _cmd_report(args) -> int:
    from .pipeline import report_runs

    print(report_runs(args.run_dirs, args.out).to_text())
    return EXIT_OK


COMMANDS = {
    "ingest": _cmd_ingest,
    "index": _cmd_index,
    "run": _cmd_run,
    "eval": _cmd_eval,
    "analyze": _cmd_analyze,
    "report": _cmd_report,
}


def _split_retrieve(argv: list[str]) -> tuple[list[str], list[str] | None]:
    """Separate ``[globals] retrieve <rest>`` so ``rest`` reaches the retriever untouched."""
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "retrieve":
            return argv[: i + 1], argv[i + 1 :]
        if tok == "--mock":
            i += 2
        elif tok in ("-v", "--verbose") or tok.startswith("--mock="):
            i += 1
        else:
            break
    return argv, None


def main(argv: list[str] | None = None) -> int:
    argv, retrieve_args = _split_retrieve(list(sys.argv[1:] if argv is None else argv))
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "retrieve":
        from .retriever.cli import main as retrieve_main

        if args.mock:
            os.environ["FSNAV_MOCK"] = str(args.mock.resolve())
        return retrieve_main(retrieve_args or [])
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"fsnav: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FsnavError, KeyError, json.JSONDecodeError) as e:
        print(f"fsnav: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
