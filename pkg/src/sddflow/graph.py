"""Weighted graphs and the basic electrical quantities defined on them.

Edges carry a fixed orientation ``(tail, head)`` with ``tail < head``. A flow
vector holds one signed value per edge; a positive value means current moving
from tail to head. ``divergence`` is the incidence transpose ``B^T f``, i.e. net
current leaving each vertex, so a flow is feasible for demands ``chi`` exactly
when ``divergence(G, f) == chi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatch,
    InfeasibleFlow,
    NonpositiveResistance,
    SelfLoop,
    VertexOutOfRange,
)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with positive edge resistances and a fixed orientation.

    Build instances with :func:`build_graph`; the constructor does not validate.
    """

    n: int
    tail: np.ndarray
    head: np.ndarray
    r: np.ndarray
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.tail, self.head, self.r):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.r)

    @property
    def w(self) -> np.ndarray:
        return 1.0 / self.r

    def edges(self):
        return list(zip(self.tail.tolist(), self.head.tolist(), self.r.tolist()))

    def edge_id(self, a: int, b: int) -> int:
        """Id of the edge joining ``a`` and ``b`` (either order); KeyError if absent."""
        if self._index is None:
            idx = {(int(t), int(h)): i for i, (t, h) in enumerate(zip(self.tail, self.head))}
            object.__setattr__(self, "_index", idx)
        return self._index[(min(a, b), max(a, b))]

    def with_resistances(self, r) -> "WeightedGraph":
        r = np.array(r, dtype=float)
        if r.shape != self.r.shape:
            raise DimensionMismatch(f"expected {self.m} resistances, got {r.shape}")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise NonpositiveResistance("resistances must be finite and positive")
        return WeightedGraph(self.n, self.tail.copy(), self.head.copy(), r)

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.tail, other.tail)
            and np.array_equal(self.head, other.head)
            and np.array_equal(self.r, other.r)
        )

    __hash__ = None


def build_graph(n: int, raw_edges) -> WeightedGraph:
    """Validate an edge list and return a graph.

    Parallel edges are merged by adding conductances; edges keep the order in
    which their vertex pair first appears.
    """
    n = int(n)
    if n < 0:
        raise VertexOutOfRange("vertex count must be non-negative")
    order = []
    cond = {}
    single = {}
    for a, b, r in raw_edges:
        a, b, r = int(a), int(b), float(r)
        if not (0 <= a < n and 0 <= b < n):
            raise VertexOutOfRange(f"edge ({a}, {b}) has a vertex outside [0, {n})")
        if a == b:
            raise SelfLoop(f"self-loop at vertex {a}")
        if not (math.isfinite(r) and r > 0):
            raise NonpositiveResistance(f"edge ({a}, {b}) has resistance {r}")
        key = (a, b) if a < b else (b, a)
        if key in cond:
            cond[key] += 1.0 / r
            single.pop(key, None)
        else:
            order.append(key)
            cond[key] = 1.0 / r
            single[key] = r
    tail = np.array([k[0] for k in order], dtype=np.int64)
    head = np.array([k[1] for k in order], dtype=np.int64)
    # an unmerged edge keeps its resistance bit-for-bit
    r = np.array([single[k] if k in single else 1.0 / cond[k] for k in order], dtype=float)
    return WeightedGraph(n, tail, head, r)


def _check_len(arr, size, what):
    arr = np.asarray(arr, dtype=float)
    if arr.shape != (size,):
        raise DimensionMismatch(f"{what} has shape {arr.shape}, expected ({size},)")
    return arr


def divergence(G: WeightedGraph, f) -> np.ndarray:
    """Net current leaving each vertex, ``B^T f``."""
    f = _check_len(f, G.m, "flow")
    return np.bincount(G.tail, f, G.n) - np.bincount(G.head, f, G.n)


def potential_drops(G: WeightedGraph, x) -> np.ndarray:
    """``B x``: ``x[tail] - x[head]`` per edge."""
    x = _check_len(x, G.n, "voltage vector")
    return x[G.tail] - x[G.head]


def apply_laplacian(G: WeightedGraph, x) -> np.ndarray:
    return divergence(G, potential_drops(G, x) / G.r)


def laplacian_matrix(G: WeightedGraph) -> sp.csr_matrix:
    w = G.w
    rows = np.concatenate([G.tail, G.head, G.tail, G.head])
    cols = np.concatenate([G.head, G.tail, G.tail, G.head])
    vals = np.concatenate([-w, -w, w, w])
    return sp.csr_matrix((vals, (rows, cols)), shape=(G.n, G.n))


def incidence_matrix(G: WeightedGraph) -> sp.csr_matrix:
    """Edge-by-vertex matrix with +1 at the tail and -1 at the head."""
    rows = np.concatenate([np.arange(G.m), np.arange(G.m)])
    cols = np.concatenate([G.tail, G.head])
    vals = np.concatenate([np.ones(G.m), -np.ones(G.m)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(G.m, G.n))


def energy(G: WeightedGraph, f) -> float:
    f = _check_len(f, G.m, "flow")
    return float(np.dot(G.r * f, f))


def laplacian_quadratic(G: WeightedGraph, x) -> float:
    """``x^T L x`` as a sum of squared drops over resistances."""
    d = potential_drops(G, x)
    return float(np.dot(d / G.r, d))


def dual_energy(G: WeightedGraph, v, chi) -> float:
    v = _check_len(v, G.n, "voltage vector")
    chi = _check_len(chi, G.n, "demand vector")
    return 2.0 * float(np.dot(v, chi)) - laplacian_quadratic(G, v)


def default_tolerance(chi) -> float:
    chi = np.asarray(chi, dtype=float)
    scale = float(np.max(np.abs(chi))) if chi.size else 0.0
    return 1e-9 * (1.0 + scale)


def check_feasible(G: WeightedGraph, f, chi, tol=None):
    """Return ``(ok, residual)`` with residual ``max |B^T f - chi|``."""
    chi = _check_len(chi, G.n, "demand vector")
    if tol is None:
        tol = default_tolerance(chi)
    res = divergence(G, f) - chi
    resid = float(np.max(np.abs(res))) if res.size else 0.0
    return resid <= tol, resid


def duality_gap(G: WeightedGraph, f, v, chi, tol=None) -> float:
    ok, resid = check_feasible(G, f, chi, tol)
    if not ok:
        raise InfeasibleFlow(f"flow misses the demands by {resid:.3e}")
    return energy(G, f) - dual_energy(G, v, chi)
