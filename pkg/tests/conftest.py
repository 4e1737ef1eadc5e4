import numpy as np
import pytest

from secisac.system_model import SystemParams, make_rng


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def rng():
    return make_rng(1234)


def random_draws(rng, count, n):
    """Pairs (h, theta) with a physical channel and a uniform angle."""
    from secisac.system_model import sample_angles, sample_channels

    h = sample_channels(rng, count, n)
    theta = sample_angles(rng, count)
    return h, theta


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion, printed at the end of the run."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
