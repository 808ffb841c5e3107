import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

TWO_PI = 2 * math.pi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_symmetric(rng, n, zero_diag=False):
    a = rng.normal(size=(n, n))
    h = a + a.T
    if zero_diag:
        np.fill_diagonal(h, 0.0)
    return h


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
