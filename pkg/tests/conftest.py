import numpy as np
import pytest

from robust_riccati import example_model

ACCEPTANCE_LINES = []


def random_spd(rng, n, cond_scale=1.0):
    G = rng.standard_normal((n, n))
    return cond_scale * (G @ G.T / n + 0.2 * np.eye(n))


def random_invertible(rng, n):
    G = rng.standard_normal((n, n))
    return G + 2.0 * np.eye(n) * np.sign(np.linalg.det(G) or 1.0)


@pytest.fixture(scope="session")
def model():
    return example_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
