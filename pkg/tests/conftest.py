import numpy as np
import pytest

from ospfock.superalgebra import TruncatedSpace

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line per criterion; shown in the terminal summary."""

    def log(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        request.config.stash[ACCEPTANCE_KEY].append(line)
        print(line)
        return ok

    return log


@pytest.fixture(scope="session")
def space():
    return TruncatedSpace(2, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
