"""Corpus ingestion and on-disk materialization.

A corpus is read from JSONL (one ``{"id", "text", "title"?}`` object per line) and
written into one of four layouts:

* ``folder``      -- one ``<id>.txt`` per document inside a directory
* ``single_json`` -- one JSON object mapping id -> text
* ``single_doc``  -- one long text file (long-document datasets)
* ``jsonl``       -- the source JSONL kept as-is (very large corpora)

Every materialization writes a ``manifest.json`` sidecar next to the corpus root.
"""

from __future__ import annotations

import enum
import json
import os
import shutil
from collections.abc import Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import islice
from pathlib import Path

from .errors import ConfigError, DuplicateId, IdCollisionAfterSanitize, MalformedLine
from .text import words as split_words

MANIFEST_NAME = "manifest.json"
DEFAULT_CHUNK_WORDS = 300


class Layout(str, enum.Enum):
    FOLDER = "folder"
    SINGLE_JSON = "single_json"
    SINGLE_DOC = "single_doc"
    JSONL = "jsonl"


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    text: str
    title: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")


@dataclass
class CorpusManifest:
    name: str
    layout: Layout
    root: Path
    doc_count: int
    total_chars: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "layout": self.layout.value,
            "root": str(self.root),
            "doc_count": self.doc_count,
            "total_chars": self.total_chars,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CorpusManifest:
        return cls(
            name=d["name"],
            layout=Layout(d["layout"]),
            root=Path(d["root"]),
            doc_count=int(d["doc_count"]),
            total_chars=int(d["total_chars"]),
        )

    @property
    def base_dir(self) -> Path:
        """Directory holding the manifest; indexes live beside, never inside, the corpus."""
        return self.root.parent

    @property
    def index_dir(self) -> Path:
        return self.base_dir / ".index"

    def save(self, path: Path | None = None) -> Path:
        path = path or manifest_path(self.root)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path


def manifest_path(root: Path) -> Path:
    return Path(root).parent / MANIFEST_NAME


def load_manifest(path: Path) -> CorpusManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise ConfigError(f"no corpus manifest at {path}")
    return CorpusManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ChunkRecord:
    parent_id: str
    chunk_index: int
    word_start: int
    word_end: int
    text: str

    @property
    def unit_id(self) -> str:
        return f"{self.parent_id}#{self.chunk_index}"

    def to_dict(self) -> dict:
        return {
            "parent_id": self.parent_id,
            "chunk_index": self.chunk_index,
            "word_start": self.word_start,
            "word_end": self.word_end,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ChunkRecord:
        return cls(d["parent_id"], d["chunk_index"], d["word_start"], d["word_end"], d["text"])


# ---------------------------------------------------------------------------
# ingestion


def ingest_jsonl(
    path: str | os.PathLike,
    *,
    id_field: str = "id",
    text_field: str = "text",
    title_field: str = "title",
    allow_empty_text: bool = False,
) -> Iterator[DocumentRecord]:
    """Stream documents from a JSONL file in file order.

    Blank lines are skipped. Integer ids are accepted and stringified; the field
    names can be remapped for dumps that use e.g. ``docid``/``contents``.
    """
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedLine(line_no, str(e)) from None
            if not isinstance(obj, dict):
                raise MalformedLine(line_no, "not a JSON object")
            doc_id = obj.get(id_field)
            text = obj.get(text_field)
            if isinstance(doc_id, int) and not isinstance(doc_id, bool):
                doc_id = str(doc_id)
            if not isinstance(doc_id, str) or not doc_id:
                raise MalformedLine(line_no, f"missing or invalid {id_field!r}")
            if not isinstance(text, str):
                raise MalformedLine(line_no, f"missing or invalid {text_field!r}")
            if not text and not allow_empty_text:
                raise MalformedLine(line_no, "empty text")
            if doc_id in seen:
                raise DuplicateId(doc_id)
            seen.add(doc_id)
            title = obj.get(title_field)
            yield DocumentRecord(doc_id, text, title if isinstance(title, str) else None)


# ---------------------------------------------------------------------------
# materialization

_UNSAFE = str.maketrans({"/": "_", "\\": "_", "\x00": "_"})


def sanitize_id(doc_id: str) -> str:
    return doc_id.translate(_UNSAFE)


def _prepare_out_dir(out_dir: Path) -> None:
    if out_dir.exists() and any(out_dir.iterdir()):
        raise ConfigError(f"output directory {out_dir} is not empty")
    out_dir.mkdir(parents=True, exist_ok=True)


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def _batches(it: Iterable, size: int) -> Iterator[list]:
    it = iter(it)
    while batch := list(islice(it, size)):
        yield batch


def materialize_folder(
    docs: Iterable[DocumentRecord],
    out_dir: str | os.PathLike,
    *,
    name: str | None = None,
    workers: int = 4,
    persist: bool = True,
) -> CorpusManifest:
    out_dir = Path(out_dir)
    _prepare_out_dir(out_dir)
    owners: dict[str, str] = {}
    count = 0
    chars = 0

    def write_batch(batch: list[tuple[Path, str]]) -> None:
        for p, t in batch:
            _write_text(p, t)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        pending = []
        for batch in _batches(docs, 256):
            jobs = []
            for doc in batch:
                fname = sanitize_id(doc.id) + ".txt"
                if fname in owners:
                    if owners[fname] == doc.id:
                        raise DuplicateId(doc.id)
                    raise IdCollisionAfterSanitize(owners[fname], doc.id, fname)
                owners[fname] = doc.id
                jobs.append((out_dir / fname, doc.text))
                count += 1
                chars += len(doc.text)
            pending.append(pool.submit(write_batch, jobs))
            if len(pending) >= 4 * max(1, workers):
                pending.pop(0).result()
        for fut in pending:
            fut.result()

    manifest = CorpusManifest(name or out_dir.name, Layout.FOLDER, out_dir.resolve(), count, chars)
    if persist:
        manifest.save()
    return manifest


def materialize_single_json(
    docs: Iterable[DocumentRecord],
    out_path: str | os.PathLike,
    *,
    name: str | None = None,
    persist: bool = True,
) -> CorpusManifest:
    """Write ``{"id": "text", ...}`` compactly, streaming, keys in ingestion order."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    seen: set[str] = set()
    count = chars = 0
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        f.write("{")
        for doc in docs:
            if doc.id in seen:
                raise DuplicateId(doc.id)
            seen.add(doc.id)
            if count:
                f.write(",")
            f.write(json.dumps(doc.id, ensure_ascii=False))
            f.write(":")
            f.write(json.dumps(doc.text, ensure_ascii=False))
            count += 1
            chars += len(doc.text)
        f.write("}")
    manifest = CorpusManifest(name or out_path.stem, Layout.SINGLE_JSON, out_path.resolve(), count, chars)
    if persist:
        manifest.save()
    return manifest


def with_header(context: str, header: str | None) -> str:
    # Header (e.g. a dataset description) and body are separated by one blank line.
    if not header:
        return context
    return header.rstrip("\n") + "\n\n" + context


def materialize_single_doc(
    context: str,
    out_path: str | os.PathLike,
    *,
    header: str | None = None,
    name: str | None = None,
    persist: bool = True,
) -> CorpusManifest:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    body = with_header(context, header)
    _write_text(out_path, body)
    manifest = CorpusManifest(name or out_path.stem, Layout.SINGLE_DOC, out_path.resolve(), 1, len(body))
    if persist:
        manifest.save()
    return manifest


def materialize_jsonl(
    src: str | os.PathLike,
    out_path: str | os.PathLike,
    *,
    name: str | None = None,
    persist: bool = True,
    **ingest_kwargs,
) -> CorpusManifest:
    """Keep a JSONL corpus as-is (hard link when possible), validating it in one pass.

    With remapped field names the records are rewritten in the canonical
    ``id``/``text``/``title`` shape instead.
    """
    src, out_path = Path(src), Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    count = chars = 0
    remapped = any(ingest_kwargs.get(k, k[:-6]) != k[:-6] for k in ("id_field", "text_field", "title_field"))
    if remapped:
        if out_path.resolve() == src.resolve():
            raise ConfigError("cannot rewrite a JSONL corpus in place")
        with open(out_path, "w", encoding="utf-8") as f:
            for doc in ingest_jsonl(src, **ingest_kwargs):
                rec = {"id": doc.id, "text": doc.text}
                if doc.title is not None:
                    rec["title"] = doc.title
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")
                count += 1
                chars += len(doc.text)
        manifest = CorpusManifest(name or out_path.stem, Layout.JSONL, out_path.resolve(), count, chars)
        if persist:
            manifest.save()
        return manifest

    for doc in ingest_jsonl(src, **ingest_kwargs):
        count += 1
        chars += len(doc.text)
    if out_path.resolve() != src.resolve():
        if out_path.exists():
            out_path.unlink()
        try:
            os.link(src, out_path)
        except OSError:
            shutil.copyfile(src, out_path)
    manifest = CorpusManifest(name or out_path.stem, Layout.JSONL, out_path.resolve(), count, chars)
    if persist:
        manifest.save()
    return manifest


# ---------------------------------------------------------------------------
# chunking


def chunk_document(parent_id: str, text: str, words_per_chunk: int = DEFAULT_CHUNK_WORDS) -> list[ChunkRecord]:
    if words_per_chunk < 1:
        raise ValueError("words_per_chunk must be >= 1")
    ws = split_words(text)
    return [
        ChunkRecord(parent_id, i, start, min(start + words_per_chunk, len(ws)), " ".join(ws[start : start + words_per_chunk]))
        for i, start in enumerate(range(0, len(ws), words_per_chunk))
    ]


# ---------------------------------------------------------------------------
# reading back


class CorpusReader:
    """Enumerate and fetch retrievable units of a materialized corpus.

    Unit ids are what an agent sees on disk: file stems for ``folder``, keys for
    ``single_json``, record ids for ``jsonl``.
    """

    def __init__(self, manifest: CorpusManifest):
        self.manifest = manifest
        self._json: dict[str, str] | None = None
        self._offsets: dict[str, int] | None = None

    @property
    def root(self) -> Path:
        return self.manifest.root

    def ids(self) -> list[str]:
        layout = self.manifest.layout
        if layout is Layout.FOLDER:
            return sorted(p.stem for p in self.root.glob("*.txt") if p.is_file())
        if layout is Layout.SINGLE_DOC:
            return [self.root.stem]
        if layout is Layout.SINGLE_JSON:
            return list(self._load_json())
        return list(self._load_offsets())

    def get(self, unit_id: str) -> str:
        layout = self.manifest.layout
        try:
            if layout is Layout.FOLDER:
                path = self.root / (sanitize_id(unit_id) + ".txt")
                if not path.is_file():
                    raise KeyError(unit_id)
                return path.read_text(encoding="utf-8")
            if layout is Layout.SINGLE_DOC:
                if unit_id != self.root.stem:
                    raise KeyError(unit_id)
                return self.root.read_text(encoding="utf-8")
            if layout is Layout.SINGLE_JSON:
                return self._load_json()[unit_id]
            offset = self._load_offsets()[unit_id]
        except KeyError:
            raise KeyError(f"unknown document id {unit_id!r}") from None
        with open(self.root, "rb") as f:
            f.seek(offset)
            return json.loads(f.readline())["text"]

    def path_of(self, unit_id: str) -> Path:
        if self.manifest.layout is Layout.FOLDER:
            return self.root / (sanitize_id(unit_id) + ".txt")
        return self.root

    def iter_units(self) -> Iterator[tuple[str, str]]:
        layout = self.manifest.layout
        if layout is Layout.JSONL:
            for doc in ingest_jsonl(self.root, allow_empty_text=True):
                yield doc.id, doc.text
        elif layout is Layout.SINGLE_JSON:
            yield from self._load_json().items()
        else:
            for uid in self.ids():
                yield uid, self.get(uid)

    def _load_json(self) -> dict[str, str]:
        if self._json is None:
            self._json = json.loads(self.root.read_text(encoding="utf-8"))
        return self._json

    def _load_offsets(self) -> dict[str, int]:
        if self._offsets is None:
            cache = self.manifest.index_dir / "offsets.json"
            if cache.exists() and cache.stat().st_mtime >= self.root.stat().st_mtime:
                self._offsets = json.loads(cache.read_text(encoding="utf-8"))
            else:
                offsets: dict[str, int] = {}
                with open(self.root, "rb") as f:
                    pos = 0
                    for line in f:
                        if line.strip():
                            doc_id = json.loads(line)["id"]
                            offsets[str(doc_id)] = pos
                        pos += len(line)
                cache.parent.mkdir(parents=True, exist_ok=True)
                cache.write_text(json.dumps(offsets), encoding="utf-8")
                self._offsets = offsets
        return self._offsets
