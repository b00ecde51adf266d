import numpy as np
import pytest

from bosotop.nambu import build_prototype_bloch

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def proto_topo():
    return build_prototype_bloch(5.0, 1.0, 1.3, 1.0, 0.0, k_points=201)


@pytest.fixture(scope="session")
def proto_triv():
    return build_prototype_bloch(5.0, 1.0, 0.7, 1.0, 0.0, k_points=201)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
