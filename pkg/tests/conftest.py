import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from densenematic.tensor3 import TracelessSym3

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_q(rng, scale=0.2, margin=0.05):
    """Random Q with smallest eigenvalue at least margin above -1/3."""
    while True:
        Q = TracelessSym3(rng.normal(size=5) * scale)
        if np.linalg.eigvalsh(Q.matrix)[0] > -1 / 3 + margin:
            return Q


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
