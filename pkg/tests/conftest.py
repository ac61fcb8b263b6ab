import sys

import numpy as np
import pytest

from constrained_prior import RngStream


@pytest.fixture
def rng():
    return RngStream(seed=20261015, stream_id=0)


def random_system(gen, K, J):
    """Random full-row-rank A, b and positive lambda_sq for property tests."""
    A = gen.normal(size=(J, K))
    b = gen.normal(size=J)
    lam_sq = np.exp(gen.uniform(-2.0, 2.0, size=K))
    return A, b, lam_sq


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
