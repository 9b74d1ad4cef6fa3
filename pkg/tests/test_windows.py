from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsnav.errors import InvalidOverlap
from fsnav.runners.windows import plan_windows
from oracles import oracle_windows


def test_500k_three_windows():
    assert plan_windows(500_000).spans == ((0, 200_000), (150_000, 350_000), (300_000, 500_000))


def test_385k_ends_at_total():
    spans = plan_windows(385_000).spans
    assert len(spans) == 3 and spans[-1] == (300_000, 385_000)


@pytest.mark.parametrize("total", [1, 199_999, 200_000])
def test_single_window(total):
    assert plan_windows(total).spans == ((0, total),)


def test_just_over_one_window():
    assert plan_windows(200_001).spans == ((0, 200_000), (150_000, 200_001))


def test_invalid_arguments():
    with pytest.raises(InvalidOverlap):
        plan_windows(10, window=5, overlap=5)
    with pytest.raises(InvalidOverlap):
        plan_windows(10, window=5, overlap=-1)
    with pytest.raises(ValueError):
        plan_windows(0)
    with pytest.raises(ValueError):
        plan_windows(10, window=0, overlap=0)


@settings(deadline=None)
@given(st.integers(1, 250_000), st.data())
def test_plan_invariants(window, data):
    overlap = data.draw(st.integers(0, window - 1))
    total = data.draw(st.integers(1, 200 * (window - overlap) + window))
    plan = plan_windows(total, window, overlap)
    spans = plan.spans
    assert list(spans) == oracle_windows(total, window, overlap)
    assert spans[0][0] == 0 and spans[-1][1] == total
    assert all(0 < e - s <= window for s, e in spans)
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        # Consecutive windows overlap by exactly the configured amount, leaving no gap.
        assert s2 == s1 + window - overlap and e1 - s2 == overlap
    assert all(e < total for _, e in spans[:-1])
