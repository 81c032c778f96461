from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from cckp.instance import DetInstance


def brute_force_knapsack(profits, weights, capacity):
    """Best profit over all subsets; independent of the DP."""
    best = 0
    for bits in itertools.product((0, 1), repeat=len(profits)):
        w = sum(wi for wi, b in zip(weights, bits) if b)
        if w <= capacity:
            best = max(best, sum(pi for pi, b in zip(profits, bits) if b))
    return best


@st.composite
def det_instances(draw, min_n=1, max_n=10, max_value=60):
    n = draw(st.integers(min_n, max_n))
    profits = draw(st.lists(st.integers(1, max_value), min_size=n, max_size=n))
    weights = draw(st.lists(st.integers(1, max_value), min_size=n, max_size=n))
    capacity = draw(st.integers(1, max_value * n))
    return DetInstance(profits, weights, capacity)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# verdict lines from test_acceptance, repeated in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
