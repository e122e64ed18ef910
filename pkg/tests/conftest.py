import numpy as np
import pytest

from pagerank_sim import Graph, generate


@pytest.fixture
def ring8():
    return generate("ring", 8)


@pytest.fixture
def grid9():
    return generate("grid", 9)


@pytest.fixture
def star6():
    return generate("star", 6)


@pytest.fixture
def er16():
    return generate("erdos-renyi", 16, seed=3, p=0.3)


@pytest.fixture
def dcycle8():
    return generate("directed-cycle", 8)


@pytest.fixture
def diamond_directed():
    # 0 -> {1, 2} -> 3 -> 0, strongly connected, uneven in-degrees
    return Graph.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 0)], directed=True)


def walk_is_legal(graph, trajectory):
    """Every consecutive pair of a trajectory must follow a graph edge."""
    return all(graph.has_edge(a, b) for a, b in zip(trajectory, trajectory[1:]))


@pytest.fixture
def legal_walk_checker():
    return walk_is_legal


def total_variation(counts_a, counts_b):
    """TV distance between two empirical distributions given as count arrays."""
    pa = np.asarray(counts_a, dtype=np.float64)
    pb = np.asarray(counts_b, dtype=np.float64)
    pa = pa / pa.sum()
    pb = pb / pb.sum()
    return 0.5 * float(np.abs(pa - pb).sum())
