import numpy as np
import pytest

from graphon_ldp import StepGraphon


def random_step(rng, n, low=0.0, high=1.0):
    M = rng.uniform(low, high, size=(n, n))
    return StepGraphon(np.triu(M) + np.triu(M, 1).T)


def random_symmetric(rng, n, low=-1.0, high=1.0):
    M = rng.uniform(low, high, size=(n, n))
    return np.triu(M) + np.triu(M, 1).T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
