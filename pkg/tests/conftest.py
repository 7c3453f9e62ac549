import numpy as np
import pytest

from specnet.algebra import INSTANCES, parse_algebra


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=INSTANCES)
def alg(request):
    return parse_algebra(request.param)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
