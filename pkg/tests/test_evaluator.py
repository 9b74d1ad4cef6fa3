from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fsnav.datasets import AnswerKind, Dataset, GoldAnswer, Question
from fsnav.errors import ConfigError, EmptyInput, NoChoiceFound, SampleTooLarge
from fsnav.evaluator import (
    EvalOutcome,
    Scorer,
    exact_match,
    extract_mcq_choice,
    extract_oolong_answer,
    llm_judge,
    load_or_create_sample,
    mean_score,
    normalize_answer,
    numeric_score,
    oolong_score,
    parse_number,
    parse_verdict,
    read_outcomes,
    sample_benchmark,
    score_answer,
    write_outcomes,
)

EM_CASES = [
    ("The Beatles", "beatles", 1),
    ("the beatles", "Beatles", 1),
    ("A cat", "cat", 1),
    ("an apple", "Apple", 1),
    ("Paris.", "paris", 1),
    ("  Paris  ", "Paris", 1),
    ("New   York\tCity", "new york city", 1),
    ("U.S.A.", "USA", 1),
    ("rock-n-roll", "rocknroll", 1),
    ("O'Brien", "obrien", 1),
    ("(1984)", "1984", 1),
    ("Theater", "ater", 0),
    ("anatomy", "atomy", 0),
    ("the", "", 1),
    ("a an the", "", 1),
    ("Paris, France", "Paris", 0),
    ("1,000", "1000", 1),
    ("Dr. Who", "dr who", 1),
    ("Café", "café", 1),
    ("Café", "cafe", 0),
    ("“quoted”", "quoted", 0),
    ("THE END", "end", 1),
    ("Answer!", "answer", 1),
    ("a\nb", "a b", 1),
    ("x a y", "x y", 1),
]


@pytest.mark.parametrize("pred,gold,expected", EM_CASES)
def test_exact_match_cases(pred, gold, expected):
    assert exact_match(pred, [gold]) == expected


def test_normalize_examples():
    assert normalize_answer("The  Quick, Brown fox!") == "quick brown fox"
    assert normalize_answer("") == ""


def test_exact_match_aliases_and_empty_gold():
    assert exact_match("JFK", ["John F. Kennedy", "JFK"]) == 1
    with pytest.raises(ValueError):
        exact_match("x", [])


@given(st.text(max_size=60))
def test_normalize_idempotent(s):
    once = normalize_answer(s)
    assert normalize_answer(once) == once


@pytest.mark.parametrize(
    "response,letter",
    [
        ("The correct answer is (B)", "B"),
        ("Reasoning...\nThe correct answer is (c).", "C"),
        ("The correct answer is A", "A"),
        ("first The correct answer is (A) then The correct answer is (D)", "D"),
        ("The correct answer is: **(B)**", "B"),
        ("I pick\nC", "C"),
        ("(D)", "D"),
    ],
)
def test_extract_mcq(response, letter):
    assert extract_mcq_choice(response) == letter


def test_mcq_no_choice():
    with pytest.raises(NoChoiceFound):
        extract_mcq_choice("I am not sure")
    with pytest.raises(NoChoiceFound):
        extract_mcq_choice("The answer is Abraham")


def test_oolong_numeric_scores():
    gold = GoldAnswer(AnswerKind.NUMERIC, 10.0)
    assert oolong_score(gold, "\\boxed{10}") == 1.0
    assert abs(oolong_score(gold, "Answer: 12") - 0.5625) <= 1e-12
    assert abs(numeric_score(3, 5) - 0.5625) <= 1e-12
    assert numeric_score(7, 7) == 1.0
    assert abs(oolong_score(gold, "Answer: 8.5") - 0.75**1.5) <= 1e-12


def test_oolong_numeric_parse_failure():
    q = Question("q1", "How many?", GoldAnswer(AnswerKind.NUMERIC, 4.0), Dataset.OOLONG_SYNTHETIC, datapoint_id="d")
    out = score_answer(q, "\\boxed{many}")
    assert out.score == 0.0 and out.flags == ["numeric_parse_failure"]


def test_oolong_label_branch():
    gold = GoldAnswer(AnswerKind.LABEL, "positive")
    assert oolong_score(gold, "Label: Positive") == 1.0
    assert oolong_score(gold, "\\boxed{negative}") == 0.0
    assert oolong_score(gold, "**positive**.") == 1.0


@given(st.text(max_size=40), st.sampled_from(["spam", "ham", "more common than", "2024-01-05"]))
def test_label_scores_are_binary(pred, gold):
    assert oolong_score(GoldAnswer(AnswerKind.LABEL, gold), pred) in (0.0, 1.0)


@given(st.integers(-1000, 1000), st.integers(-1000, 1000))
def test_numeric_score_range(g, p):
    s = numeric_score(g, p)
    assert 0.0 <= s <= 1.0 and (s == 1.0) == (g == p)


def test_extract_oolong_answer():
    assert extract_oolong_answer("work... \\boxed{3} then \\boxed{5}") == "5"
    assert extract_oolong_answer("Answer: 'spam'.") == "spam"
    assert extract_oolong_answer("plain") == "plain"
    assert parse_number("1,234") == 1234.0
    assert parse_number("about 7 users") == 7.0
    assert parse_number("none") is None


def test_parse_verdict():
    assert parse_verdict("Correct") == 1
    assert parse_verdict("The answer is incorrect.") == 0
    assert parse_verdict("CORRECT.") == 1
    assert parse_verdict("uncorrected") is None
    assert parse_verdict("maybe") is None


def bc_question():
    return Question("b1", "Who founded it?", GoldAnswer(AnswerKind.FREEFORM, "Brandon Beck"), Dataset.BROWSECOMP_PLUS)


def test_llm_judge(mock_gateway):
    gw, t = mock_gateway({"chat": [{"match": {"contains": ["Predicted answer: Beck"]}, "reply": {"text": "correct"}}, {"reply": {"text": "incorrect"}}]})
    assert llm_judge(bc_question(), "Beck", gw, "judge").score == 1.0
    assert llm_judge(bc_question(), "Someone", gw, "judge").score == 0.0
    assert t.calls[0][2]["role"] == "judge"


def test_llm_judge_reprompts_once(mock_gateway):
    gw, t = mock_gateway({"chat": [{"replies": [{"text": "hmm"}, {"text": "still unsure"}]}]})
    out = llm_judge(bc_question(), "x", gw, "judge")
    assert out.score == 0.0 and out.flags == ["unparseable_verdict"] and t.chat_calls == 2
    gw, t = mock_gateway({"chat": [{"replies": [{"text": "hmm"}, {"text": "correct"}]}]})
    assert llm_judge(bc_question(), "x", gw, "judge").score == 1.0


def test_score_answer_routing(mock_gateway):
    nq = Question("n", "q", GoldAnswer(AnswerKind.FREEFORM, "Paris"), Dataset.NQ)
    assert score_answer(nq, "paris").scorer is Scorer.EM
    lb = Question("l", "q", GoldAnswer(AnswerKind.MCQ_LETTER, "B"), Dataset.LONGBENCH, choices=("a", "b", "c", "d"), datapoint_id="d")
    assert score_answer(lb, "The correct answer is (B)").score == 1.0
    miss = score_answer(lb, "no idea")
    assert miss.score == 0.0 and miss.flags == ["no_choice_found"]
    with pytest.raises(ConfigError):
        score_answer(bc_question(), "x")


def test_mean_and_io(tmp_path):
    outs = [EvalOutcome("a", 1.0, Scorer.EM), EvalOutcome("b", 0.5625, Scorer.OOLONG_NUMERIC, ["f"], "12")]
    assert mean_score(outs) == pytest.approx(78.125)
    write_outcomes(tmp_path / "e.jsonl", outs)
    assert read_outcomes(tmp_path / "e.jsonl") == outs
    with pytest.raises(EmptyInput):
        mean_score([])
    with pytest.raises(ValueError):
        EvalOutcome("x", 1.5, Scorer.EM)


def test_sampling(tmp_path):
    ids = [f"q{i}" for i in range(50)]
    a = sample_benchmark(ids, 10, seed=3)
    assert a == sample_benchmark(ids, 10, seed=3) and len(set(a)) == 10
    assert a != sample_benchmark(ids, 10, seed=4)
    with pytest.raises(SampleTooLarge):
        sample_benchmark(ids, 51)
    saved = load_or_create_sample(tmp_path, Dataset.NQ, ids, 10, 3)
    assert saved == a
    data = json.loads((tmp_path / "nq.sample.3.json").read_text())
    assert data == {"dataset": "nq", "seed": 3, "n": 10, "ids": a}
    # Later calls reuse the file even if the index changes order.
    assert load_or_create_sample(tmp_path, Dataset.NQ, ids[::-1], 10, 3) == a
    assert len(load_or_create_sample(tmp_path, Dataset.LONGBENCH, ids[:5], 200, 0)) == 5
    with pytest.raises(ConfigError):
        load_or_create_sample(tmp_path, Dataset.NQ, ids, 20, 3)
