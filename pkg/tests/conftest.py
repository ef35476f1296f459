import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", max_examples=150, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# coordinates on a 0.01 grid: distinct points stay resolvably far apart
coord = st.integers(-5000, 5000).map(lambda k: k / 100.0)


@st.composite
def nonzero_vectors(draw, dim=None, min_dim=2, max_dim=6):
    n = dim if dim is not None else draw(st.integers(min_dim, max_dim))
    v = draw(st.lists(coord, min_size=n, max_size=n))
    if not any(v):
        v[0] = 1.0
    return np.array(v)


@st.composite
def vector_tuples(draw, k, min_dim=2, max_dim=6):
    n = draw(st.integers(min_dim, max_dim))
    return tuple(draw(nonzero_vectors(dim=n)) for _ in range(k))


@st.composite
def sample_sets(draw, max_size=12, min_dim=2, max_dim=4):
    """Distinct nonzero points with finite values."""
    n = draw(st.integers(min_dim, max_dim))
    m = draw(st.integers(1, max_size))
    pts = draw(st.lists(nonzero_vectors(dim=n), min_size=m, max_size=m,
                        unique_by=lambda v: tuple(v)))
    vals = draw(st.lists(st.floats(-100, 100), min_size=len(pts), max_size=len(pts)))
    return np.array(pts), np.array(vals)


@pytest.fixture
def example_points():
    """The two-sample worked example: rewards 50 at (1,0) and 0 at (2,0)."""
    return np.array([[1.0, 0.0], [2.0, 0.0]]), np.array([50.0, 0.0])


def angle_oracle(u, v):
    """Textbook angle: arccos of the clamped cosine, divided by pi."""
    u, v = list(map(float, u)), list(map(float, v))
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return math.acos(max(-1.0, min(1.0, dot / (nu * nv)))) / math.pi


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
