import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fdik.model import builtin_ur10, conditioned  # noqa: E402


@pytest.fixture(scope="session")
def ur10():
    return builtin_ur10()


@pytest.fixture(scope="session")
def twin(ur10):
    return conditioned(ur10, "twin")


@pytest.fixture(scope="session")
def uniform(ur10):
    return conditioned(ur10, "uniform")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
