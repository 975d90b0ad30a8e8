import numpy as np
import pytest

from sddflow.graph import build_graph
from sddflow.tree import build_tree


@pytest.fixture
def k3():
    G = build_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    T = build_tree(G, "given", edges=[(0, 1), (1, 2)])
    return G, T, np.array([1.0, 0.0, -1.0])


@pytest.fixture
def c4():
    G = build_graph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])
    T = build_tree(G, "given", edges=[(0, 1), (1, 2), (2, 3)])
    return G, T


def path_graph(n, r=1.0):
    return build_graph(n, [(i, i + 1, r) for i in range(n - 1)])


def star_graph(n):
    return build_graph(n, [(0, i, 1.0) for i in range(1, n)])
