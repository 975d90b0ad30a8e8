"""Seeded random instances for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .graph import WeightedGraph, build_graph


def random_recursive_tree_edges(n: int, rng) -> list:
    """Vertex ``i`` attaches to a uniform earlier vertex."""
    return [(int(rng.integers(0, i)), i) for i in range(1, n)]


def random_tree(n: int, seed=0, rmin=0.5, rmax=2.0) -> WeightedGraph:
    rng = np.random.default_rng(seed)
    edges = random_recursive_tree_edges(n, rng)
    r = rng.uniform(rmin, rmax, size=len(edges))
    return build_graph(n, [(a, b, x) for (a, b), x in zip(edges, r)])


def random_connected_graph(n: int, m: int, seed=0, rmin=0.5, rmax=2.0) -> WeightedGraph:
    """Random spanning tree plus distinct extra edges, ``m`` edges in total when possible."""
    rng = np.random.default_rng(seed)
    edges = random_recursive_tree_edges(n, rng)
    # shuffle labels so the tree is not aligned with vertex ids
    perm = rng.permutation(n)
    seen = set()
    pairs = []
    for a, b in edges:
        a, b = int(perm[a]), int(perm[b])
        key = (min(a, b), max(a, b))
        seen.add(key)
        pairs.append(key)
    max_m = n * (n - 1) // 2
    target = min(m, max_m)
    while len(pairs) < target:
        a, b = (int(x) for x in rng.integers(0, n, size=2))
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        pairs.append(key)
    r = rng.uniform(rmin, rmax, size=len(pairs))
    return build_graph(n, [(a, b, x) for (a, b), x in zip(pairs, r)])


def random_demand(n: int, seed=0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    chi = rng.standard_normal(n)
    return chi - chi.mean()


def random_sdd(n: int, density=0.3, seed=0, positive_fraction=0.3, slack=0.5) -> np.ndarray:
    """Symmetric diagonally dominant matrix with mixed-sign off-diagonals."""
    rng = np.random.default_rng(seed)
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                v = rng.uniform(0.1, 2.0)
                if rng.random() < positive_fraction:
                    A[i, j] = A[j, i] = v
                else:
                    A[i, j] = A[j, i] = -v
    # keep it connected through a negative path
    for i in range(n - 1):
        if A[i, i + 1] == 0:
            A[i, i + 1] = A[i + 1, i] = -rng.uniform(0.1, 2.0)
    extra = np.where(rng.random(n) < 0.5, 0.0, rng.uniform(0, slack, size=n))
    A[np.diag_indices(n)] = np.abs(A).sum(axis=1) + extra
    return A
