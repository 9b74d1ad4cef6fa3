"""Tokenization helpers: retrieval terms, chunking words, and approximate LLM tokens."""

from __future__ import annotations

import math
import re
from typing import Protocol

_TERM = re.compile(r"[^\W_]+")


def terms(text: str) -> list[str]:
    """Retrieval terms: Unicode-lowercased alphanumeric runs. No stemming, no stopwords."""
    return _TERM.findall(text.lower())


def words(text: str) -> list[str]:
    """Whitespace-delimited words, the unit used for 300-word chunks."""
    return text.split()


class Tokenizer(Protocol):
    def count(self, text: str) -> int: ...

    def count_chars(self, n_chars: int) -> int: ...

    def slice(self, text: str, start: int, end: int) -> str: ...


class CharTokenizer:
    """Provider-agnostic approximation: one token per ``chars_per_token`` characters.

    Token ``i`` covers characters ``[i*c, (i+1)*c)``, so token spans map back to
    text without a vocabulary.
    """

    def __init__(self, chars_per_token: int = 4):
        if chars_per_token < 1:
            raise ValueError("chars_per_token must be >= 1")
        self.chars_per_token = chars_per_token

    def count(self, text: str) -> int:
        return self.count_chars(len(text))

    def count_chars(self, n_chars: int) -> int:
        return math.ceil(n_chars / self.chars_per_token)

    def slice(self, text: str, start: int, end: int) -> str:
        c = self.chars_per_token
        return text[start * c : end * c]


DEFAULT_TOKENIZER = CharTokenizer()
