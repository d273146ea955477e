import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from smmpipe.corpus import synthetic_dataset  # noqa: E402

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {name}")


@pytest.fixture
def task3_small():
    return synthetic_dataset("task3", {0: 15, 1: 10, 2: 10, 3: 5}, split="dev", seed=3)


@pytest.fixture
def task5_dev():
    # dev-sized: 254 negatives, 135 positives
    return synthetic_dataset("task5", {0: 254, 1: 135}, split="dev", seed=5)


@pytest.fixture
def task6_mixed():
    return synthetic_dataset("task6", {0: 30, 1: 20}, split="dev", seed=6,
                             platforms=("reddit", "twitter"))


class CountingTransport:
    """Offline transport that records every request and answers from a script."""

    needs_credentials = False

    def __init__(self, answer=lambda body: "1"):
        self.answer = answer
        self.calls = 0
        self.bodies = []

    def __call__(self, url, headers, body):
        self.calls += 1
        self.bodies.append(body)
        out = self.answer(body)
        if isinstance(out, Exception):
            raise out
        return {"text": out}


@pytest.fixture
def counting_transport():
    return CountingTransport
