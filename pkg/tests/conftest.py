import numpy as np
import pytest

from disparity_lab import datasets
from disparity_lab.graph import Partition, WeightedGraph

# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def random_connected_graph(rng, n, p=0.4, weighted=True):
    """G(n, p) plus a random spanning path, so the sample is always connected."""
    W = np.triu((rng.random((n, n)) < p).astype(float), 1)
    perm = rng.permutation(n)
    for a, b in zip(perm[:-1], perm[1:]):
        W[min(a, b), max(a, b)] = 1.0
    if weighted:
        W = W * rng.uniform(0.5, 3.0, size=W.shape)
    return WeightedGraph.from_adjacency(W + W.T)


def random_partition(rng, n):
    mask = rng.random(n) < 0.5
    if mask.all() or not mask.any():
        mask[0] = not mask[0]
    return Partition(mask)


def random_unit_opinions(rng, n):
    s = rng.random(n) + 1e-3
    return s / np.linalg.norm(s)


def path_graph(n):
    return WeightedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n):
    return WeightedGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


@pytest.fixture(scope="session")
def karate():
    return datasets.karate()


@pytest.fixture(scope="session")
def lesmis():
    return datasets.les_miserables()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
