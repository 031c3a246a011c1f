import numpy as np
import pytest

from hyperlam.geom import octagon_group

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def octagon():
    return octagon_group()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
