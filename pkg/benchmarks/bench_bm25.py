"""Compare the numba and pure-numpy BM25 scoring backends.

Builds a synthetic Zipf-distributed corpus in memory, then times the score
accumulation kernel alone and a full top-k search for each backend::

    python benchmarks/bench_bm25.py --docs 50000 --words 200 --queries 200

Set FSNAV_DISABLE_NUMBA=1 to check that the default backend falls back to numpy.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

import numpy as np

from fsnav import _kernels
from fsnav.retriever.bm25 import build_bm25


@dataclass
class Timing:
    backend: str
    kernel_ms: float
    search_ms: float


def synthetic_corpus(n_docs: int, words: int, vocab_size: int, seed: int) -> list[tuple[str, str]]:
    rng = np.random.default_rng(seed)
    vocab = np.array([f"w{i}" for i in range(vocab_size)])
    p = 1.0 / np.arange(1, vocab_size + 1)
    p /= p.sum()
    ids = rng.choice(vocab_size, size=(n_docs, words), p=p)
    return [(f"d{i}", " ".join(vocab[row])) for i, row in enumerate(ids)]


def queries(n: int, vocab_size: int, seed: int) -> list[str]:
    rng = np.random.default_rng(seed + 1)
    # Mix frequent and rare terms so posting lists vary in length.
    return [" ".join(f"w{int(x)}" for x in rng.zipf(1.3, size=4) % vocab_size) for _ in range(n)]


def time_backend(index, name: str, qs: list[str], k: int, repeat: int) -> Timing:
    kernel = _kernels.BACKENDS[name]
    index.search(qs[0], k, backend=kernel)  # compile / warm caches
    best_kernel = best_search = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        for q in qs:
            index._accumulate(q, kernel)
        best_kernel = min(best_kernel, time.perf_counter() - t)
        t = time.perf_counter()
        for q in qs:
            index.search(q, k, backend=kernel)
        best_search = min(best_search, time.perf_counter() - t)
    return Timing(name, 1e3 * best_kernel / len(qs), 1e3 * best_search / len(qs))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--docs", type=int, default=50_000)
    ap.add_argument("--words", type=int, default=200)
    ap.add_argument("--vocab", type=int, default=50_000)
    ap.add_argument("--queries", type=int, default=200)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t = time.perf_counter()
    index = build_bm25(synthetic_corpus(args.docs, args.words, args.vocab, args.seed))
    print(f"index: {args.docs} docs, {len(index.vocab)} terms, {index.tf.shape[0]} postings, built in {time.perf_counter() - t:.1f}s")
    print(f"default backend: {_kernels.BACKEND}")

    qs = queries(args.queries, args.vocab, args.seed)
    timings = [time_backend(index, name, qs, args.k, args.repeat) for name in sorted(_kernels.BACKENDS)]

    # Both backends must rank identically before their speed is worth comparing.
    ref = _kernels.BACKENDS["numpy"]
    for name, kernel in _kernels.BACKENDS.items():
        for q in qs[:20]:
            a = [(h.unit_id, h.score) for h in index.search(q, args.k, backend=ref)]
            b = [(h.unit_id, h.score) for h in index.search(q, args.k, backend=kernel)]
            assert a == b, (name, q)

    print(f"{'backend':<8} {'kernel ms/query':>16} {'search ms/query':>16}")
    for tm in timings:
        print(f"{tm.backend:<8} {tm.kernel_ms:>16.3f} {tm.search_ms:>16.3f}")
    by_name = {tm.backend: tm for tm in timings}
    if "numba" in by_name:
        print(f"numba speedup: kernel x{by_name['numpy'].kernel_ms / by_name['numba'].kernel_ms:.2f}, "
              f"search x{by_name['numpy'].search_ms / by_name['numba'].search_ms:.2f}")


if __name__ == "__main__":
    main()
