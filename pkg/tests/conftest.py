import numpy as np
import pytest
from hypothesis import strategies as st

from afmech.manifold import barycenter, lift


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_assignment(rng, m, n, scale=1.0):
    return lift(barycenter(m, n), scale * rng.standard_normal((m, n)))


def random_symmetric_stochastic(rng, m):
    """(P + P^T)/2 for a random convex combination of permutations."""
    w = rng.dirichlet(np.ones(3))
    P = w[0] * np.eye(m) + w[1] * np.eye(m)[rng.permutation(m)] + w[2] * np.eye(m)[rng.permutation(m)]
    return 0.5 * (P + P.T)


shapes = st.tuples(st.integers(1, 6), st.integers(2, 6))
seeds = st.integers(0, 2**32 - 1)


@st.composite
def assignments(draw, max_m=6, max_n=6, scale=2.0):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(2, max_n))
    rng = np.random.default_rng(draw(seeds))
    return random_assignment(rng, m, n, scale)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
