import pytest

from orderfill import ProblemSpec


@pytest.fixture
def fig1():
    """Reward/probability setting used by the cycle-length comparison (T and N vary per test)."""
    return ProblemSpec(3, 10, 20, 2, (5, 8, 10), (0.3, 0.2, 0.3, 0.2), 2.0)


@pytest.fixture
def small():
    return ProblemSpec(3, 4, 6, 1, (1, 9, 10), (0.3, 0.3, 0.3, 0.1), 0.5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
