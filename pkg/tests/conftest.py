from __future__ import annotations

import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fsnav.gateway import Gateway, MockTransport  # noqa: E402


@pytest.fixture
def no_sleep():
    waits: list[float] = []
    return waits


@pytest.fixture
def mock_gateway(no_sleep):
    def make(fixture: dict | None = None, **kw) -> tuple[Gateway, MockTransport]:
        transport = MockTransport(fixture or {})
        return Gateway(transport, sleep=no_sleep.append, **kw), transport

    return make


# One line per acceptance criterion, printed in the terminal summary.
CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Context manager recording PASS/FAIL for one numbered acceptance criterion."""

    @contextmanager
    def record(number: int, title: str):
        start = time.perf_counter()
        try:
            yield
        except BaseException as e:
            CRITERIA[number] = f"FAIL  {number:2d}. {title} ({type(e).__name__}, {time.perf_counter() - start:.2f}s)"
            raise
        CRITERIA[number] = f"PASS  {number:2d}. {title} ({time.perf_counter() - start:.2f}s)"

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
