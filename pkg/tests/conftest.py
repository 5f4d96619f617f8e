import numpy as np
import pytest

from gossip_blocks.model import five_node_model, to_general

ACCEPTANCE_LINES = []


@pytest.fixture
def small_model():
    return five_node_model()


@pytest.fixture
def small_net(small_model):
    return to_general(small_model)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
