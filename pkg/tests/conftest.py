import numpy as np
import pytest

VERDICTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(cid, ok, detail):
        line = f"{cid} {'PASS' if ok else 'FAIL'}: {detail}"
        VERDICTS.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
