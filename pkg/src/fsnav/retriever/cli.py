"""Retriever command line, the tool named in the agent prompts::

    python retriever.py --dataset browsecomp-plus --embedding-model BM25 \
        --query "your query here" --top-k 5 [--datapoint-id 17]

Exit codes: 0 ok, 2 usage error, 3 unknown dataset, datapoint or missing index.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..datasets import DataRoot, Dataset
from ..errors import ConfigError, FsnavError
from .hits import RetrievalHit
from .index import is_sparse, open_retriever

EXIT_USAGE = 2
EXIT_CONFIG = 3

SHIM_NAME = "retriever.py"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="retriever.py", description="Top-k retrieval over an ingested dataset.")
    p.add_argument("--dataset", required=True)
    # nargs="+" so unquoted multi-word model names still parse.
    p.add_argument("--embedding-model", required=True, nargs="+")
    p.add_argument("--query", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--datapoint-id")
    p.add_argument("--data-dir", help="data directory (default: $FSNAV_DATA_DIR)")
    p.add_argument("--max-chars", type=int, help="truncate each printed text to this many characters")
    return p


def format_hits(hits: list[RetrievalHit], max_chars: int | None = None) -> str:
    blocks = []
    for rank, h in enumerate(hits, start=1):
        text = h.text if max_chars is None or len(h.text) <= max_chars else h.text[:max_chars] + " ..."
        blocks.append(f"[{rank}] id: {h.unit_id}\nscore: {h.score:.4f}\n{text}\n")
    return "\n".join(blocks)


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.top_k < 1:
        parser.print_usage(sys.stderr)
        print("retriever.py: error: --top-k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    model = " ".join(args.embedding_model)
    try:
        dataset = Dataset(args.dataset)
    except ValueError:
        known = ", ".join(d.value for d in Dataset)
        print(f"retriever.py: unknown dataset {args.dataset!r} (known: {known})", file=sys.stderr)
        return EXIT_CONFIG
    if dataset.is_long_doc and not args.datapoint_id:
        parser.print_usage(sys.stderr)
        print(f"retriever.py: error: --datapoint-id is required for {dataset.value}", file=sys.stderr)
        return EXIT_USAGE
    data_dir = args.data_dir or os.environ.get("FSNAV_DATA_DIR")
    if not data_dir:
        print("retriever.py: no data directory (set FSNAV_DATA_DIR or pass --data-dir)", file=sys.stderr)
        return EXIT_CONFIG
    store = DataRoot(data_dir).store(dataset)
    try:
        embedder = None
        if not is_sparse(model):
            from ..gateway import gateway_from_env

            embedder = gateway_from_env()
        retriever = open_retriever(
            store, model, embedder=embedder, datapoint_id=args.datapoint_id if dataset.is_long_doc else None
        )
        hits = retriever.search(args.query, args.top_k)
    except KeyError as e:
        print(f"retriever.py: {e.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, FsnavError) as e:
        print(f"retriever.py: {e}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(format_hits(hits, args.max_chars))
    return 0


def write_shim(directory: str | os.PathLike, *, data_dir: str | os.PathLike, env: dict[str, str] | None = None) -> Path:
    """Emit the two-line ``retriever.py`` launcher that delegates to this CLI."""
    src = str(Path(__file__).resolve().parents[2])
    settings = {"FSNAV_DATA_DIR": str(Path(data_dir).resolve()), **(env or {})}
    line1 = f"import os, sys; sys.path.insert(0, {src!r}); os.environ.update({settings!r})"
    line2 = "from fsnav.retriever.cli import main; sys.exit(main())"
    path = Path(directory) / SHIM_NAME
    path.write_text(f"{line1}\n{line2}\n", encoding="utf-8")
    return path


if __name__ == "__main__":
    sys.exit(main())
