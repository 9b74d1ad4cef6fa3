"""Dense retrieval: embedding store, on-disk vector cache, exact cosine search.

Vectors are stored in a flat binary record file::

    u32 id_len | id (utf-8) | u32 dim | dim x f32      (little endian, repeated)

The same format backs both the per-model content cache (ids are SHA-256 of the
unit text) and persisted stores (ids are unit ids). Later records win.
"""

from __future__ import annotations

import hashlib
import re
import struct
from collections.abc import Iterator, Sequence
from pathlib import Path
from typing import Protocol

import numpy as np

from ..errors import ConfigError, DimensionMismatch
from .hits import RetrievalHit

_U32 = struct.Struct("<I")


class Embedder(Protocol):
    def embed(self, texts: list[str], model: str) -> list[list[float]]: ...


def write_records(path: Path, records: Sequence[tuple[str, np.ndarray]], *, append: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "ab" if append else "wb") as f:
        for rid, vec in records:
            raw = rid.encode("utf-8")
            v = np.asarray(vec, dtype="<f4")
            f.write(_U32.pack(len(raw)))
            f.write(raw)
            f.write(_U32.pack(v.shape[0]))
            f.write(v.tobytes())


def read_records(path: Path) -> Iterator[tuple[str, np.ndarray]]:
    data = Path(path).read_bytes()
    pos = 0
    while pos < len(data):
        (n,) = _U32.unpack_from(data, pos)
        pos += 4
        rid = data[pos : pos + n].decode("utf-8")
        pos += n
        (dim,) = _U32.unpack_from(data, pos)
        pos += 4
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=pos).copy()
        pos += 4 * dim
        yield rid, vec


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def model_slug(model_tag: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", model_tag).strip("_") or "model"


class EmbeddingStore:
    def __init__(self, unit_ids: list[str], matrix: np.ndarray, model_tag: str):
        matrix = np.asarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[0] != len(unit_ids):
            raise DimensionMismatch(f"matrix shape {matrix.shape} does not match {len(unit_ids)} ids")
        self.unit_ids = list(unit_ids)
        self.matrix = matrix
        self.model_tag = model_tag
        self.dim = int(matrix.shape[1])
        order = sorted(range(len(unit_ids)), key=self.unit_ids.__getitem__)
        self._rank = np.empty(len(unit_ids), dtype=np.int64)
        self._rank[order] = np.arange(len(unit_ids))
        self._unit: np.ndarray | None = None

    @property
    def vectors(self) -> dict[str, np.ndarray]:
        return dict(zip(self.unit_ids, self.matrix))

    def __len__(self) -> int:
        return len(self.unit_ids)

    def _unit_rows(self) -> np.ndarray:
        if self._unit is None:
            m = self.matrix.astype(np.float64)
            norms = np.linalg.norm(m, axis=1, keepdims=True)
            self._unit = np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)
        return self._unit

    def search(self, query_vec, k: int = 5, text_lookup=None) -> list[RetrievalHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query_vec, dtype=np.float64)
        if q.shape != (self.dim,):
            raise DimensionMismatch(f"query has shape {q.shape}, store dim is {self.dim}")
        qn = np.linalg.norm(q)
        scores = self._unit_rows() @ q / qn if qn > 0 else np.zeros(len(self.unit_ids))
        order = np.lexsort((self._rank, -scores))[:k]
        return [
            RetrievalHit(self.unit_ids[i], float(scores[i]), text_lookup(self.unit_ids[i]) if text_lookup else "")
            for i in order
        ]

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        write_records(path, list(zip(self.unit_ids, self.matrix)))
        return path

    @classmethod
    def load(cls, path: str | Path, model_tag: str) -> EmbeddingStore:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"no embedding store at {path}")
        recs = dict(read_records(path))
        if not recs:
            raise ConfigError(f"embedding store {path} is empty")
        dims = {v.shape[0] for v in recs.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"store {path} mixes dimensions {sorted(dims)}")
        return cls(list(recs), np.stack(list(recs.values())), model_tag)


def embed_units(
    units: Sequence[tuple[str, str]],
    gateway: Embedder,
    model_tag: str,
    cache_dir: str | Path | None = None,
) -> EmbeddingStore:
    """Embed every unit, reusing cached vectors keyed by (model, text hash)."""
    cache_path = Path(cache_dir) / f"{model_slug(model_tag)}.cache.bin" if cache_dir else None
    cached: dict[str, np.ndarray] = {}
    if cache_path is not None and cache_path.exists():
        cached = dict(read_records(cache_path))

    hashes = [content_hash(text) for _, text in units]
    missing: dict[str, str] = {}
    for h, (_, text) in zip(hashes, units):
        if h not in cached and h not in missing:
            missing[h] = text

    if missing:
        vecs = gateway.embed(list(missing.values()), model_tag)
        if len(vecs) != len(missing):
            raise DimensionMismatch(f"endpoint returned {len(vecs)} vectors for {len(missing)} inputs")
        fresh = [(h, np.asarray(v, dtype=np.float32)) for h, v in zip(missing, vecs)]
        if cache_path is not None:
            write_records(cache_path, fresh, append=True)
        cached.update(fresh)

    rows = [cached[h] for h in hashes]
    dims = {r.shape[0] for r in rows}
    if len(dims) > 1:
        raise DimensionMismatch(f"inconsistent embedding lengths {sorted(dims)}")
    if not rows:
        raise ConfigError("no units to embed")
    return EmbeddingStore([uid for uid, _ in units], np.stack(rows), model_tag)


def dense_search(store: EmbeddingStore, query_vec, k: int = 5, text_lookup=None) -> list[RetrievalHit]:
    return store.search(query_vec, k, text_lookup)
