import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from obnoxious_voting import forge
from obnoxious_voting.model import Grouping, OrdinalProfile

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def euclidean_instances(draw, n_max=10, m_max=5, k_max=4, dims=(1, 2, 3)):
    n = draw(st.integers(1, n_max))
    k = draw(st.integers(1, min(n, k_max)))
    m = draw(st.integers(1, m_max))
    dim = draw(st.sampled_from(dims))
    seed = draw(st.integers(0, 2**31 - 1))
    return forge.gen_random_euclidean(n, m, k, dim, seed)


@st.composite
def line_instances(draw, n_max=10, m_max=5, k_max=4):
    n = draw(st.integers(1, n_max))
    k = draw(st.integers(1, min(n, k_max)))
    m = draw(st.integers(1, m_max))
    return forge.gen_random_line(n, m, k, draw(st.integers(0, 2**31 - 1)))


@st.composite
def profiles(draw, n_max=6, m_max=4, k_max=3, m_min=1):
    m = draw(st.integers(m_min, m_max))
    n = draw(st.integers(1, n_max))
    rankings = tuple(
        tuple(draw(st.permutations(list(range(m))))) for _ in range(n)
    )
    k = draw(st.integers(1, min(n, k_max)))
    # every group non-empty: first k agents seed the groups
    rest = draw(st.lists(st.integers(0, k - 1), min_size=n - k, max_size=n - k))
    assignment = tuple(range(k)) + tuple(rest)
    return OrdinalProfile(n, m, rankings, Grouping(assignment, k))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
