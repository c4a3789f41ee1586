import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gbest.core import Dataset

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_dataset(time, event, X=None, weight=None):
    time = np.asarray(time, dtype=float)
    if X is None:
        X = np.zeros((time.size, 1))
    X = np.asarray(X, dtype=float).reshape(time.size, -1)
    return Dataset(time, event, X, [f"x{j}" for j in range(X.shape[1])], weight)


@pytest.fixture
def toy():
    return make_dataset([2, 3, 5], [True, False, True], [[0.5], [1.0], [2.0]])


@pytest.fixture
def separable():
    """Early events for x < 0, late events for x > 0."""
    rng = np.random.default_rng(7)
    x = np.concatenate([rng.uniform(-2, -0.5, 10), rng.uniform(0.5, 2, 10)])
    t = np.concatenate([rng.uniform(1, 2, 10), rng.uniform(8, 9, 10)])
    return make_dataset(t, np.ones(20, bool), x[:, None])


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for *_, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
