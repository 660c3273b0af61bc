import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance verdict line (``passed=None`` for an informational line).

    All lines are echoed in the terminal summary.
    """
    def _report(name, passed, detail):
        status = "INFO" if passed is None else "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"{status}  {name}: {detail}")
        return passed
    return _report


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance criteria that simulate full grids")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
