"""Independent reference implementations used to freeze expected values.

These are written from the textbook definitions, term by term, with no shared
code from the package.
"""

from __future__ import annotations

import math
import re


def oracle_tokens(text: str) -> list[str]:
    # Lowercase, then keep maximal runs of letters and digits.
    out, cur = [], []
    for ch in text.lower():
        if ch.isalnum():
            cur.append(ch)
        elif cur:
            out.append("".join(cur))
            cur = []
    if cur:
        out.append("".join(cur))
    return out


class OracleBm25:
    """Okapi BM25 over a fixed corpus, with document frequencies counted once."""

    def __init__(self, docs: dict[str, str], k1: float = 1.2, b: float = 0.75) -> None:
        self.k1, self.b = k1, b
        self.toks = {d: oracle_tokens(t) for d, t in docs.items()}
        self.n = len(docs)
        self.avg = sum(len(t) for t in self.toks.values()) / self.n
        self.df: dict[str, int] = {}
        for ts in self.toks.values():
            for term in set(ts):
                self.df[term] = self.df.get(term, 0) + 1

    def scores(self, query: str) -> dict[str, float]:
        """Score of every document that shares at least one query term."""
        k1, b = self.k1, self.b
        out: dict[str, float] = {}
        for d, ts in self.toks.items():
            total = 0.0
            hit = False
            for q in oracle_tokens(query):
                tf = ts.count(q)
                if tf == 0:
                    continue
                hit = True
                df = self.df[q]
                idf = math.log((self.n - df + 0.5) / (df + 0.5) + 1)
                total += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(ts) / self.avg))
            if hit:
                out[d] = total
        return out


def oracle_bm25(docs: dict[str, str], query: str, k1: float = 1.2, b: float = 0.75) -> dict[str, float]:
    return OracleBm25(docs, k1, b).scores(query)


def oracle_ranking(scores: dict[str, float], k: int) -> list[str]:
    return [d for d, _ in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))][:k]


def oracle_cosine(vectors: dict[str, list[float]], query: list[float]) -> dict[str, float]:
    qn = math.sqrt(sum(x * x for x in query))
    out = {}
    for d, v in vectors.items():
        vn = math.sqrt(sum(x * x for x in v))
        dot = sum(a * b for a, b in zip(v, query))
        out[d] = 0.0 if qn == 0 or vn == 0 else dot / (qn * vn)
    return out


def oracle_words(text: str) -> list[str]:
    return re.findall(r"\S+", text)


def oracle_windows(total: int, window: int, overlap: int) -> list[tuple[int, int]]:
    spans = []
    i = 0
    while True:
        start = i * (window - overlap)
        end = min(start + window, total)
        spans.append((start, end))
        if end == total:
            return spans
        i += 1


_BOX = re.compile(r"\\begin\{promptbox\}\[([^\]]*)\]\{(\w+)\}\n(.*?)\n\\end\{promptbox\}", re.S)
_FAMILY_BY_COLOR = {
    "codingagentcolor": "coding_agent",
    "retrievercolor": "coding_agent_retriever",
    "reactcolor": "react",
    "fullcontextcolor": "full_context",
}
_DATASET_BY_TITLE = {
    "BrowseComp-Plus": "browsecomp-plus",
    "LongBench-v2": "longbench",
    "Natural Questions": "nq",
    "Oolong-Real": "oolong_real",
    "Oolong-Synthetic": "oolong_synthetic",
}


def unlatex_promptbox(body: str) -> str:
    lines = body.split("\n")
    if lines and lines[0].strip().startswith("\\small"):
        lines = lines[1:]
    text = re.sub(r"\\\\$", "", "\n".join(lines), flags=re.M)
    for src, dst in [("\\textbackslash ", "\\"), ("\\{", "{"), ("\\}", "}"), ("\\_", "_"), ("\\%", "%"), ("\\&", "&")]:
        text = text.replace(src, dst)
    return text


def prompt_boxes(markdown: str) -> dict[str, str]:
    """Prompt templates found in the source document, keyed ``family__dataset``."""
    out = {}
    for title, color, body in _BOX.findall(markdown):
        name = title.replace(" + Retriever", "")
        if name in _DATASET_BY_TITLE and color in _FAMILY_BY_COLOR:
            out[f"{_FAMILY_BY_COLOR[color]}__{_DATASET_BY_TITLE[name]}"] = unlatex_promptbox(body)
    return out
