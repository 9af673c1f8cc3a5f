import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uqt.scoring import ScoringRule

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"

ALL_RULES = list(ScoringRule)
CENTRAL_RULES = [ScoringRule.LOG, ScoringRule.BRIER, ScoringRule.SPHERICAL]


def random_simplex(rng, shape, K, concentration=1.0):
    """Dirichlet draws of shape ``shape + (K,)``."""
    return rng.dirichlet(np.full(K, concentration), size=shape)


def interior(rng, shape, K):
    # Dirichlet(1) draws can sit within 1e-300 of a face; keep them clear of it
    p = random_simplex(rng, shape, K) + 1e-6
    return p / p.sum(axis=-1, keepdims=True)


@st.composite
def simplex_vectors(draw, K=None, min_k=2, max_k=6):
    k = draw(st.integers(min_k, max_k)) if K is None else K
    w = draw(arrays(np.float64, k, elements=st.floats(1e-3, 1.0)))
    return w / w.sum()


@st.composite
def ensembles(draw, max_m=6, max_k=5):
    m = draw(st.integers(1, max_m))
    k = draw(st.integers(2, max_k))
    w = draw(arrays(np.float64, (m, k), elements=st.floats(1e-3, 1.0)))
    return w / w.sum(axis=-1, keepdims=True)


# One line per acceptance criterion, filled in by test_acceptance.py and
# printed at the end of the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def hand_members():
    return np.array([[0.5, 0.5], [0.9, 0.1]])
