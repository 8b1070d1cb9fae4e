"""Shared fixtures for regperc tests."""

import pytest

from regperc.gaussian_wave import WaveModel
from regperc.regular_graph import Graph, generate_regular


# ---------------------------------------------------------------------------
# Hand-made graphs
# ---------------------------------------------------------------------------

PETERSEN_EDGES = (
    [(i, (i + 1) % 5) for i in range(5)]
    + [(i, i + 5) for i in range(5)]
    + [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
)

K4_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

K33_EDGES = [(i, j) for i in range(3) for j in range(3, 6)]

SQUARE_EDGES = [(0, 1), (1, 2), (2, 3), (3, 0)]


@pytest.fixture(autouse=True)
def _no_worker_env(monkeypatch):
    monkeypatch.delenv("REGPERC_WORKERS", raising=False)


@pytest.fixture
def petersen():
    return Graph.from_edges(10, PETERSEN_EDGES)


@pytest.fixture
def k4():
    return Graph.from_edges(4, K4_EDGES)


@pytest.fixture
def k33():
    return Graph.from_edges(6, K33_EDGES)


@pytest.fixture
def square():
    """The 4-cycle v0-v1-v2-v3-v0."""
    return Graph.from_edges(4, SQUARE_EDGES)


@pytest.fixture
def hexagon():
    return Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])


@pytest.fixture
def random_cubic():
    return generate_regular(60, 3, 11)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

@pytest.fixture
def model_03():
    return WaveModel(0.0, 3)


@pytest.fixture
def model_13():
    return WaveModel(1.0, 3)
