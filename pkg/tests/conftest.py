import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def cf_se(n, ref):
    """Pointwise standard error of an empirical CF with target ``ref``."""
    return np.sqrt(np.clip(1 - np.abs(ref) ** 2, 0, None) / n)


@pytest.fixture
def xi_grid():
    return np.concatenate([-np.logspace(-1, 1, 10)[::-1], np.logspace(-1, 1, 10)])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
