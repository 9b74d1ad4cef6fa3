"""Answer scoring per benchmark protocol, and the shared evaluation samples."""

from __future__ import annotations

import enum
import json
import random
import re
import string
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import AnswerKind, Dataset, GoldAnswer, Question
from .errors import ConfigError, EmptyInput, NoChoiceFound, SampleTooLarge
from .gateway.types import ChatRequest, Message


class Scorer(str, enum.Enum):
    EM = "EM"
    MCQ = "MCQ"
    OOLONG_EXACT = "OolongExact"
    OOLONG_NUMERIC = "OolongNumeric"
    LLM_JUDGE = "LlmJudge"


@dataclass
class EvalOutcome:
    question_id: str
    score: float
    scorer: Scorer
    flags: list[str] = field(default_factory=list)
    extracted: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def to_dict(self) -> dict:
        d: dict = {"question_id": self.question_id, "score": self.score, "scorer": self.scorer.value}
        if self.flags:
            d["flags"] = self.flags
        if self.extracted is not None:
            d["extracted"] = self.extracted
        return d

    @classmethod
    def from_dict(cls, d: dict) -> EvalOutcome:
        return cls(d["question_id"], float(d["score"]), Scorer(d["scorer"]), list(d.get("flags", [])), d.get("extracted"))


# ---------------------------------------------------------------------------
# exact match

_PUNCT = frozenset(string.punctuation)
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def normalize_answer(text: str) -> str:
    """Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def exact_match(pred: str, golds: Sequence[str]) -> int:
    if not golds:
        raise ValueError("exact_match needs at least one gold answer")
    p = normalize_answer(pred)
    return int(any(p == normalize_answer(g) for g in golds))


# ---------------------------------------------------------------------------
# multiple choice

_MCQ = re.compile(r"the\s+correct\s+answer\s+is\s*[:\-]?\s*\**\s*(?:\(\s*([A-Da-d])\s*\)|([A-D])(?![A-Za-z0-9]))", re.IGNORECASE)
_LONE_LETTER = re.compile(r"(?:^|[\s(\[*])\(?([A-D])\)?[\s.)\]*!]*$")


def extract_mcq_choice(response: str) -> str:
    matches = list(_MCQ.finditer(response))
    if matches:
        m = matches[-1]
        return (m.group(1) or m.group(2)).upper()
    m = _LONE_LETTER.search(response.strip())
    if m:
        return m.group(1)
    raise NoChoiceFound(f"no A-D choice in {response[-80:]!r}")


# ---------------------------------------------------------------------------
# Oolong

OOLONG_BASE = 0.75
_BOXED = re.compile(r"\\boxed\{((?:[^{}]|\{[^{}]*\})*)\}")
_ANSWER_LINE = re.compile(r"^\s*(?:final\s+answer|answer|label|user|date)\s*[:=]\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)
_NUMBER = re.compile(r"-?\d+(?:,\d{3})*(?:\.\d+)?|-?\.\d+")


def extract_oolong_answer(pred: str) -> str:
    """Pull the answer span out of a response: last ``\\boxed{}``, else last ``Answer:``-style line, else the text."""
    boxed = _BOXED.findall(pred)
    if boxed:
        text = boxed[-1]
    else:
        lines = _ANSWER_LINE.findall(pred)
        text = lines[-1] if lines else pred
    prev = None
    while prev != text:
        prev = text
        text = text.strip().rstrip(".").strip("*`").strip()
        if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
            text = text[1:-1]
    return text


def parse_number(text: str) -> float | None:
    """A float from the whole string, else from its last number; None if there is none."""
    cleaned = text.strip().replace(",", "")
    try:
        value = float(cleaned)
    except ValueError:
        found = _NUMBER.findall(text)
        if not found:
            return None
        value = float(found[-1].replace(",", ""))
    return value if value == value and abs(value) != float("inf") else None


def numeric_score(gold: float, pred: float) -> float:
    return OOLONG_BASE ** abs(gold - pred)


def oolong_outcome(question_id: str, gold: GoldAnswer, pred: str) -> EvalOutcome:
    answer = extract_oolong_answer(pred)
    if gold.kind is AnswerKind.NUMERIC:
        value = parse_number(answer)
        if value is None:
            return EvalOutcome(question_id, 0.0, Scorer.OOLONG_NUMERIC, ["numeric_parse_failure"], answer)
        return EvalOutcome(question_id, numeric_score(float(gold.value), value), Scorer.OOLONG_NUMERIC, [], answer)
    ok = any(answer.casefold() == g.strip().casefold() for g in gold.strings)
    return EvalOutcome(question_id, float(ok), Scorer.OOLONG_EXACT, [], answer)


def oolong_score(gold: GoldAnswer, pred: str) -> float:
    return oolong_outcome("", gold, pred).score


# ---------------------------------------------------------------------------
# LLM judge

JUDGE_TEMPLATE = """You are grading a predicted answer to a question against the correct answer.

Question: {question}
Correct answer: {gold}
Predicted answer: {pred}

Judge only whether the predicted answer refers to the same thing as the correct answer; ignore formatting and extra explanation. Reply with exactly one word: correct or incorrect."""

JUDGE_REPROMPT = "Reply with exactly one word: correct or incorrect."

_VERDICT = re.compile(r"\b(incorrect|correct)\b", re.IGNORECASE)


def parse_verdict(text: str) -> int | None:
    m = _VERDICT.search(text)
    if m is None:
        return None
    return int(m.group(1).lower() == "correct")


def judge_prompt(q: Question, pred: str) -> str:
    gold = " / ".join(q.gold.strings)
    return JUDGE_TEMPLATE.format(question=q.text, gold=gold, pred=pred.strip())


def llm_judge(q: Question, pred: str, gateway, model: str, recorder=None) -> EvalOutcome:
    messages = [Message("user", judge_prompt(q, pred))]
    tags = {"role": "judge", "question_id": q.id}
    resp = gateway.chat(ChatRequest(model, messages, tags=tags), recorder)
    verdict = parse_verdict(resp.text)
    if verdict is None:
        messages += [Message("assistant", resp.text), Message("user", JUDGE_REPROMPT)]
        resp = gateway.chat(ChatRequest(model, messages, tags=tags), recorder)
        verdict = parse_verdict(resp.text)
    if verdict is None:
        return EvalOutcome(q.id, 0.0, Scorer.LLM_JUDGE, ["unparseable_verdict"], resp.text)
    return EvalOutcome(q.id, float(verdict), Scorer.LLM_JUDGE, [], resp.text.strip())


# ---------------------------------------------------------------------------
# routing


def scorer_for(dataset: Dataset, gold: GoldAnswer) -> Scorer:
    if dataset is Dataset.BROWSECOMP_PLUS:
        return Scorer.LLM_JUDGE
    if dataset is Dataset.NQ:
        return Scorer.EM
    if dataset is Dataset.LONGBENCH:
        return Scorer.MCQ
    return Scorer.OOLONG_NUMERIC if gold.kind is AnswerKind.NUMERIC else Scorer.OOLONG_EXACT


def score_answer(q: Question, pred: str, *, gateway=None, judge_model: str | None = None, recorder=None) -> EvalOutcome:
    scorer = scorer_for(q.dataset, q.gold)
    if scorer is Scorer.LLM_JUDGE:
        if gateway is None or not judge_model:
            raise ConfigError(f"{q.dataset.value} is scored by an LLM judge; configure judge_model")
        return llm_judge(q, pred, gateway, judge_model, recorder)
    if scorer is Scorer.EM:
        return EvalOutcome(q.id, float(exact_match(pred, q.gold.strings)), scorer, [], normalize_answer(pred))
    if scorer is Scorer.MCQ:
        try:
            letter = extract_mcq_choice(pred)
        except NoChoiceFound:
            return EvalOutcome(q.id, 0.0, scorer, ["no_choice_found"])
        return EvalOutcome(q.id, float(letter == q.gold.value), scorer, [], letter)
    return oolong_outcome(q.id, q.gold, pred)


def mean_score(outcomes: Iterable[EvalOutcome]) -> float:
    """Benchmark metric in percent (accuracy, EM or Oolong score)."""
    scores = [o.score for o in outcomes]
    if not scores:
        raise EmptyInput("no outcomes to summarize")
    return 100.0 * sum(scores) / len(scores)


def write_outcomes(path: str | Path, outcomes: Iterable[EvalOutcome]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for o in outcomes:
            f.write(json.dumps(o.to_dict(), sort_keys=True) + "\n")


def read_outcomes(path: str | Path) -> list[EvalOutcome]:
    with open(path, encoding="utf-8") as f:
        return [EvalOutcome.from_dict(json.loads(line)) for line in f if line.strip()]


# ---------------------------------------------------------------------------
# sampling

DEFAULT_SAMPLE_N = 200


def sample_benchmark(dataset_index: Sequence[str], n: int = DEFAULT_SAMPLE_N, seed: int = 0) -> list[str]:
    if n < 1:
        raise ValueError("n must be positive")
    if n > len(dataset_index):
        raise SampleTooLarge(f"cannot sample {n} from {len(dataset_index)} questions")
    return random.Random(seed).sample(list(dataset_index), n)


def sample_path(directory: str | Path, dataset: Dataset, seed: int) -> Path:
    return Path(directory) / f"{dataset.value}.sample.{seed}.json"


def load_or_create_sample(
    directory: str | Path, dataset: Dataset, dataset_index: Sequence[str], n: int, seed: int
) -> list[str]:
    """Persisted sample so every method is evaluated on the same subset."""
    path = sample_path(directory, dataset, seed)
    n = min(n, len(dataset_index))
    if path.exists():
        saved = json.loads(path.read_text(encoding="utf-8"))
        if saved["n"] != n:
            raise ConfigError(f"{path} holds a sample of {saved['n']}, config asks for {n}")
        return list(saved["ids"])
    ids = sample_benchmark(dataset_index, n, seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"dataset": dataset.value, "seed": seed, "n": n, "ids": ids}
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return ids
