import numpy as np
import pytest
from hypothesis import settings

from regmdp import FiniteMdp, TabularPolicy

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

STANDARD = dict(seed=2, n_states=5, n_actions=3, K=6, gamma=0.8)


def random_mdp(rng, n_states, n_actions, gamma=0.9):
    p = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    return FiniteMdp(p, rng.random((n_states, n_actions)), gamma)


def random_policy(rng, n_states, n_actions, floor=0.0):
    return TabularPolicy(rng.dirichlet(np.ones(n_actions), size=n_states) * (1 - floor * n_actions) + floor)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
