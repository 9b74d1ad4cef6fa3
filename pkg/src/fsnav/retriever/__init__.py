"""Sparse (BM25) and dense retrieval over documents or 300-word chunks."""

from .bm25 import B, K1, Bm25Index, bm25_search, build_bm25, idf
from .dense import EmbeddingStore, dense_search, embed_units
from .hits import RetrievalHit
from .index import DenseRetriever, Retriever, SparseRetriever, build_all, build_index, is_sparse, load_chunks, open_retriever

__all__ = [
    "B",
    "K1",
    "Bm25Index",
    "DenseRetriever",
    "EmbeddingStore",
    "RetrievalHit",
    "Retriever",
    "SparseRetriever",
    "bm25_search",
    "build_all",
    "build_bm25",
    "build_index",
    "dense_search",
    "embed_units",
    "idf",
    "is_sparse",
    "load_chunks",
    "open_retriever",
]
