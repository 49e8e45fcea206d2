import numpy as np
import pytest

from spikestego.codebook import canonical

_ACCEPTANCE = []


@pytest.fixture
def cb():
    return canonical()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
