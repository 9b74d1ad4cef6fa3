"""Okapi BM25 over an inverted index stored as CSR postings."""

from __future__ import annotations

import json
import math
from array import array
from collections import Counter
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import _kernels
from ..errors import ConfigError, DuplicateId, EmptyCorpus
from ..text import terms
from .hits import RetrievalHit

K1 = 1.2
B = 0.75


def idf(n_units: int, df: int) -> float:
    return math.log((n_units - df + 0.5) / (df + 0.5) + 1.0)


@dataclass
class Bm25Index:
    """Inverted index. Postings for term id ``t`` live in ``[indptr[t], indptr[t+1])``."""

    unit_ids: list[str]
    vocab: dict[str, int]
    indptr: np.ndarray  # int64, len(vocab) + 1
    doc_idx: np.ndarray  # int32, unit position per posting
    tf: np.ndarray  # int32
    doc_len: np.ndarray  # int32, token count per unit
    k1: float = K1
    b: float = B
    texts: list[str] | None = None
    text_lookup: Callable[[str], str] | None = None

    def __post_init__(self):
        self.n_units = len(self.unit_ids)
        total = int(self.doc_len.sum())
        self.avg_doc_len = total / self.n_units if self.n_units else 0.0
        if self.avg_doc_len > 0:
            self._norm = self.k1 * (1.0 - self.b + self.b * self.doc_len / self.avg_doc_len)
        else:
            self._norm = np.full(self.n_units, self.k1 * (1.0 - self.b))
        order = sorted(range(self.n_units), key=self.unit_ids.__getitem__)
        self._rank = np.empty(self.n_units, dtype=np.int64)
        self._rank[order] = np.arange(self.n_units)
        self._pos = {u: i for i, u in enumerate(self.unit_ids)}

    # -- views matching the logical index shape

    def postings(self, term: str) -> list[tuple[str, int]]:
        t = self.vocab.get(term)
        if t is None:
            return []
        s, e = self.indptr[t], self.indptr[t + 1]
        return [(self.unit_ids[d], int(f)) for d, f in zip(self.doc_idx[s:e], self.tf[s:e])]

    def df(self, term: str) -> int:
        t = self.vocab.get(term)
        return 0 if t is None else int(self.indptr[t + 1] - self.indptr[t])

    def length(self, unit_id: str) -> int:
        return int(self.doc_len[self._pos[unit_id]])

    def score(self, query: str, unit_id: str) -> float:
        """Score of one unit, through the same kernel used by search."""
        scores, _ = self._accumulate(query)
        return 0.0 if scores is None else float(scores[self._pos[unit_id]])

    def text_of(self, unit_id: str) -> str:
        if self.texts is not None:
            return self.texts[self._pos[unit_id]]
        if self.text_lookup is not None:
            return self.text_lookup(unit_id)
        return ""

    # -- search

    def _accumulate(self, query: str, backend=None):
        tids = [self.vocab[t] for t in terms(query) if t in self.vocab]
        if not tids:
            return None, None
        term_ids = np.asarray(tids, dtype=np.int64)
        dfs = self.indptr[term_ids + 1] - self.indptr[term_ids]
        weights = np.log((self.n_units - dfs + 0.5) / (dfs + 0.5) + 1.0)
        kernel = backend or _kernels.bm25_accumulate
        return kernel(self.indptr, self.doc_idx, self.tf, self._norm, term_ids, weights, float(self.k1), self.n_units)

    def search(self, query: str, k: int = 5, *, backend=None) -> list[RetrievalHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        scores, touched = self._accumulate(query, backend)
        if scores is None:
            return []
        best = _kernels.top_k(scores, np.flatnonzero(touched), self._rank, k)
        return [RetrievalHit(self.unit_ids[d], float(scores[d]), self.text_of(self.unit_ids[d])) for d in best]

    # -- persistence

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        np.savez(directory / "postings.npz", indptr=self.indptr, doc_idx=self.doc_idx, tf=self.tf, doc_len=self.doc_len)
        terms_by_id = [""] * len(self.vocab)
        for term, t in self.vocab.items():
            terms_by_id[t] = term
        meta = {"version": 1, "k1": self.k1, "b": self.b, "n_units": self.n_units, "avg_doc_len": self.avg_doc_len}
        (directory / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
        (directory / "vocab.json").write_text(json.dumps(terms_by_id, ensure_ascii=False), encoding="utf-8")
        (directory / "units.json").write_text(json.dumps(self.unit_ids, ensure_ascii=False), encoding="utf-8")
        return directory

    @classmethod
    def load(cls, directory: str | Path, text_lookup: Callable[[str], str] | None = None) -> Bm25Index:
        directory = Path(directory)
        if not (directory / "meta.json").exists():
            raise ConfigError(f"no BM25 index at {directory}")
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        arrays = np.load(directory / "postings.npz")
        terms_by_id = json.loads((directory / "vocab.json").read_text(encoding="utf-8"))
        unit_ids = json.loads((directory / "units.json").read_text(encoding="utf-8"))
        return cls(
            unit_ids=unit_ids,
            vocab={t: i for i, t in enumerate(terms_by_id)},
            indptr=arrays["indptr"],
            doc_idx=arrays["doc_idx"],
            tf=arrays["tf"],
            doc_len=arrays["doc_len"],
            k1=meta["k1"],
            b=meta["b"],
            text_lookup=text_lookup,
        )


def build_bm25(
    units: Iterable[tuple[str, str]],
    *,
    k1: float = K1,
    b: float = B,
    keep_texts: bool = False,
) -> Bm25Index:
    """Tokenize units in one pass and lay postings out term-major."""
    unit_ids: list[str] = []
    seen: set[str] = set()
    vocab: dict[str, int] = {}
    term_col = array("i")
    tf_col = array("i")
    doc_col = array("i")
    doc_len = array("i")
    texts: list[str] | None = [] if keep_texts else None
    setdefault = vocab.setdefault

    for uid, text in units:
        if uid in seen:
            raise DuplicateId(uid)
        seen.add(uid)
        d = len(unit_ids)
        unit_ids.append(uid)
        if texts is not None:
            texts.append(text)
        toks = terms(text)
        doc_len.append(len(toks))
        counts = Counter(toks)
        term_col.extend([setdefault(t, len(vocab)) for t in counts])
        tf_col.extend(counts.values())
        doc_col.extend([d] * len(counts))

    if not unit_ids:
        raise EmptyCorpus("cannot build an index over zero units")

    tids = np.frombuffer(term_col, dtype=np.int32) if term_col else np.zeros(0, np.int32)
    order = np.argsort(tids, kind="stable")
    counts_per_term = np.bincount(tids, minlength=len(vocab)) if len(tids) else np.zeros(len(vocab), np.int64)
    indptr = np.zeros(len(vocab) + 1, dtype=np.int64)
    np.cumsum(counts_per_term, out=indptr[1:])
    doc_idx = np.frombuffer(doc_col, dtype=np.int32)[order] if doc_col else np.zeros(0, np.int32)
    tf = np.frombuffer(tf_col, dtype=np.int32)[order] if tf_col else np.zeros(0, np.int32)
    return Bm25Index(
        unit_ids=unit_ids,
        vocab=vocab,
        indptr=indptr,
        doc_idx=np.ascontiguousarray(doc_idx),
        tf=np.ascontiguousarray(tf),
        doc_len=np.frombuffer(doc_len, dtype=np.int32).copy(),
        k1=k1,
        b=b,
        texts=texts,
    )


def bm25_search(index: Bm25Index, query: str, k: int = 5) -> list[RetrievalHit]:
    return index.search(query, k)
