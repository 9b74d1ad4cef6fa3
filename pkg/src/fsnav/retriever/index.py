"""Building, persisting and opening retrievers for an ingested dataset.

Corpus datasets retrieve whole documents; long-document datasets retrieve
300-word chunks of one datapoint's context. Layout under ``<dataset>/.index/``::

    bm25/                          corpus BM25 index
    dense/<model>.bin              corpus embedding store
    dense-cache/<model>.cache.bin  content-addressed embedding cache (shared)
    chunks/<datapoint>/chunks.jsonl
    chunks/<datapoint>/bm25/
    chunks/<datapoint>/dense/<model>.bin
"""

from __future__ import annotations

import json
import threading
from collections.abc import Callable
from pathlib import Path
from typing import Protocol

from ..corpus import DEFAULT_CHUNK_WORDS, ChunkRecord, chunk_document
from ..datasets import DatasetStore
from ..errors import ConfigError
from .bm25 import Bm25Index, build_bm25
from .dense import EmbeddingStore, Embedder, embed_units, model_slug
from .hits import RetrievalHit

SPARSE_NAME = "BM25"


def is_sparse(model: str) -> bool:
    return model.strip().upper() == SPARSE_NAME


class Retriever(Protocol):
    def search(self, query: str, k: int) -> list[RetrievalHit]: ...

    def get_document(self, unit_id: str) -> str: ...


class SparseRetriever:
    def __init__(self, index: Bm25Index, text_lookup: Callable[[str], str]):
        self.index = index
        self.text_lookup = text_lookup
        self.index.text_lookup = text_lookup

    def search(self, query: str, k: int) -> list[RetrievalHit]:
        return self.index.search(query, k)

    def get_document(self, unit_id: str) -> str:
        return self.text_lookup(unit_id)


class DenseRetriever:
    def __init__(self, store: EmbeddingStore, embedder: Embedder, text_lookup: Callable[[str], str]):
        self.store = store
        self.embedder = embedder
        self.text_lookup = text_lookup

    def search(self, query: str, k: int) -> list[RetrievalHit]:
        (vec,) = self.embedder.embed([query], self.store.model_tag)
        return self.store.search(vec, k, self.text_lookup)

    def get_document(self, unit_id: str) -> str:
        return self.text_lookup(unit_id)


# ---------------------------------------------------------------------------
# units


def chunk_dir(store: DatasetStore, datapoint_id: str) -> Path:
    return store.index_dir / "chunks" / datapoint_id


_chunk_lock = threading.Lock()


def load_chunks(store: DatasetStore, datapoint_id: str, words_per_chunk: int = DEFAULT_CHUNK_WORDS) -> list[ChunkRecord]:
    """Chunks of one datapoint's context, computed once and cached on disk."""
    path = chunk_dir(store, datapoint_id) / "chunks.jsonl"
    with _chunk_lock:
        if path.exists():
            with open(path, encoding="utf-8") as f:
                return [ChunkRecord.from_dict(json.loads(line)) for line in f if line.strip()]
        chunks = chunk_document(datapoint_id, store.context(datapoint_id), words_per_chunk)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            for c in chunks:
                f.write(json.dumps(c.to_dict(), ensure_ascii=False) + "\n")
        tmp.replace(path)
        return chunks


def _unit_source(store: DatasetStore, datapoint_id: str | None):
    """(units iterable factory, text lookup, index directory) for the retrieval scope."""
    if store.dataset.is_long_doc:
        if datapoint_id is None:
            raise ConfigError(f"{store.dataset.value} retrieves chunks of one datapoint; a datapoint id is required")
        chunks = load_chunks(store, datapoint_id)
        texts = {c.unit_id: c.text for c in chunks}
        return (lambda: iter(texts.items())), texts.__getitem__, chunk_dir(store, datapoint_id)
    reader = store.reader()
    return reader.iter_units, reader.get, store.index_dir


def sparse_index_dir(store: DatasetStore, datapoint_id: str | None = None) -> Path:
    base = chunk_dir(store, datapoint_id) if store.dataset.is_long_doc and datapoint_id else store.index_dir
    return base / "bm25"


def dense_store_path(store: DatasetStore, model: str, datapoint_id: str | None = None) -> Path:
    base = chunk_dir(store, datapoint_id) if store.dataset.is_long_doc and datapoint_id else store.index_dir
    return base / "dense" / f"{model_slug(model)}.bin"


def build_sparse(store: DatasetStore, datapoint_id: str | None = None) -> Bm25Index:
    units, lookup, _ = _unit_source(store, datapoint_id)
    index = build_bm25(units())
    index.save(sparse_index_dir(store, datapoint_id))
    index.text_lookup = lookup
    return index


def build_dense(store: DatasetStore, embedder: Embedder, model: str, datapoint_id: str | None = None) -> EmbeddingStore:
    units, _, _ = _unit_source(store, datapoint_id)
    emb = embed_units(list(units()), embedder, model, cache_dir=store.index_dir / "dense-cache")
    emb.save(dense_store_path(store, model, datapoint_id))
    return emb


def build_index(store: DatasetStore, model: str, embedder: Embedder | None = None, datapoint_id: str | None = None):
    if is_sparse(model):
        return build_sparse(store, datapoint_id)
    if embedder is None:
        raise ConfigError("dense indexing needs an embedding endpoint")
    return build_dense(store, embedder, model, datapoint_id)


def build_all(store: DatasetStore, model: str, embedder: Embedder | None = None) -> int:
    """Index the whole dataset (every datapoint for long-document datasets); returns index count."""
    if not store.dataset.is_long_doc:
        build_index(store, model, embedder)
        return 1
    dps = store.datapoint_ids()
    for dp in dps:
        build_index(store, model, embedder, dp)
    return len(dps)


def open_retriever(
    store: DatasetStore,
    model: str,
    *,
    embedder: Embedder | None = None,
    datapoint_id: str | None = None,
    build_missing: bool = False,
) -> Retriever:
    """Open a persisted index; raises ConfigError when it is missing (unless ``build_missing``)."""
    _, lookup, _ = _unit_source(store, datapoint_id)
    if is_sparse(model):
        path = sparse_index_dir(store, datapoint_id)
        if not (path / "meta.json").exists():
            if not build_missing:
                raise ConfigError(f"no BM25 index at {path}; run `fsnav index` first")
            return SparseRetriever(build_sparse(store, datapoint_id), lookup)
        return SparseRetriever(Bm25Index.load(path, lookup), lookup)
    if embedder is None:
        raise ConfigError("dense retrieval needs an embedding endpoint")
    path = dense_store_path(store, model, datapoint_id)
    if not path.exists():
        if not build_missing:
            raise ConfigError(f"no embedding store at {path}; run `fsnav index` first")
        return DenseRetriever(build_dense(store, embedder, model, datapoint_id), embedder, lookup)
    return DenseRetriever(EmbeddingStore.load(path, model), embedder, lookup)
