"""Numeric inner loops for sparse retrieval.

Two interchangeable backends: numba ``@njit`` kernels and pure-numpy
equivalents. numba is used when importable unless ``FSNAV_DISABLE_NUMBA=1``.
Both backends accumulate query terms in the same order, so scores agree bit
for bit.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("FSNAV_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")


def bm25_accumulate_numpy(indptr, doc_idx, tfs, norm, term_ids, weights, k1, n_units):
    """Sum per-term BM25 contributions into a dense score vector.

    ``norm[d]`` is the precomputed ``k1 * (1 - b + b * len_d / avg_len)``;
    ``weights[j]`` is the idf of ``term_ids[j]``. Returns ``(scores, touched)``.
    """
    scores = np.zeros(n_units, dtype=np.float64)
    touched = np.zeros(n_units, dtype=np.bool_)
    for j in range(term_ids.shape[0]):
        t = term_ids[j]
        s, e = indptr[t], indptr[t + 1]
        d = doc_idx[s:e]
        tf = tfs[s:e].astype(np.float64)
        scores[d] += weights[j] * (tf * (k1 + 1.0)) / (tf + norm[d])
        touched[d] = True
    return scores, touched


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def bm25_accumulate_numba(indptr, doc_idx, tfs, norm, term_ids, weights, k1, n_units):
        scores = np.zeros(n_units, dtype=np.float64)
        touched = np.zeros(n_units, dtype=np.bool_)
        for j in range(term_ids.shape[0]):
            t = term_ids[j]
            w = weights[j]
            for p in range(indptr[t], indptr[t + 1]):
                d = doc_idx[p]
                tf = np.float64(tfs[p])
                scores[d] += w * (tf * (k1 + 1.0)) / (tf + norm[d])
                touched[d] = True
        return scores, touched

else:  # pragma: no cover
    bm25_accumulate_numba = None


BACKENDS = {"numpy": bm25_accumulate_numpy}
if HAVE_NUMBA:
    BACKENDS["numba"] = bm25_accumulate_numba

BACKEND = "numba" if USE_NUMBA else "numpy"
bm25_accumulate = BACKENDS[BACKEND]


def top_k(scores: np.ndarray, candidates: np.ndarray, tie_rank: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` best candidates: score descending, then ``tie_rank`` ascending."""
    s = scores[candidates]
    if candidates.shape[0] > k:
        cut = s.shape[0] - k
        threshold = np.partition(s, cut)[cut]
        keep = s >= threshold
        candidates, s = candidates[keep], s[keep]
    order = np.lexsort((tie_rank[candidates], -s))[:k]
    return candidates[order]
