import numpy as np
import pytest

ACCEPTANCE = []


@pytest.fixture
def record():
    """Record one acceptance criterion outcome: record(tag, passed, detail)."""

    def _record(tag, passed, detail=""):
        ACCEPTANCE.append((tag, bool(passed), detail))
        return passed

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {tag}  {detail}")
