"""Rooted spanning trees, tree paths, stretch and the off-tree sampling weights."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.cluster.hierarchy import DisjointSet
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree

from .errors import GraphDisconnected, InvalidTreeEdges, VertexOutOfRange
from .graph import WeightedGraph

STRATEGIES = ("low_stretch", "min_resistance", "given")


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """A spanning tree of a connected graph, rooted at ``root``.

    ``parent_sign[v]`` is +1 when the graph edge to the parent is oriented from
    the parent towards ``v`` and -1 otherwise; it is 0 at the root.
    ``order`` lists vertices in depth-first preorder (children visited by
    increasing id) and ``pre`` is its inverse, so the subtree of ``v`` occupies
    ``order[pre[v]:pre[v] + size[v]]``.
    """

    n: int
    root: int
    parent: np.ndarray
    parent_edge: np.ndarray
    parent_sign: np.ndarray
    depth: np.ndarray
    depth_resistance: np.ndarray
    order: np.ndarray
    pre: np.ndarray
    size: np.ndarray
    in_tree: np.ndarray
    off_tree: np.ndarray
    up: np.ndarray  # binary-lifting ancestor table, shape (levels, n)

    @property
    def tree_edges(self) -> np.ndarray:
        return np.flatnonzero(self.in_tree)


@dataclass(frozen=True)
class StretchSummary:
    stretch: np.ndarray  # per edge; exactly 1 on tree edges
    off_tree: np.ndarray  # edge ids, same order as cycle_resistance and p
    cycle_resistance: np.ndarray
    total_stretch: float
    tau: float
    p: np.ndarray


def is_connected(G: WeightedGraph) -> bool:
    if G.n <= 1:
        return True
    adj = sp.coo_matrix((np.ones(G.m), (G.tail, G.head)), shape=(G.n, G.n))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


def tree_from_edges(G: WeightedGraph, edge_ids, root: int = 0) -> SpanningTree:
    """Root the tree formed by ``edge_ids`` at ``root``; validates that it spans G."""
    n = G.n
    if not 0 <= root < max(n, 1):
        raise VertexOutOfRange(f"root {root} outside [0, {n})")
    edge_ids = np.unique(np.asarray(edge_ids, dtype=np.int64))
    if len(edge_ids) != max(n - 1, 0):
        raise InvalidTreeEdges(f"a spanning tree on {n} vertices needs {n - 1} edges, got {len(edge_ids)}")
    if len(edge_ids) and (edge_ids.min() < 0 or edge_ids.max() >= G.m):
        raise InvalidTreeEdges("tree edge id out of range")

    adj = [[] for _ in range(n)]
    for e in edge_ids.tolist():
        a, b = int(G.tail[e]), int(G.head[e])
        adj[a].append((b, e))
        adj[b].append((a, e))
    for lst in adj:
        lst.sort()

    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    parent_sign = np.zeros(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    dres = np.zeros(n, dtype=float)
    order = []
    if n:
        parent[root] = root
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        stack = [root]
        while stack:
            u = stack.pop()
            order.append(u)
            for v, e in reversed(adj[u]):
                if seen[v]:
                    if v != parent[u]:
                        raise InvalidTreeEdges("tree edges contain a cycle")
                    continue
                seen[v] = True
                parent[v] = u
                parent_edge[v] = e
                parent_sign[v] = 1 if G.tail[e] == u else -1
                depth[v] = depth[u] + 1
                dres[v] = dres[u] + G.r[e]
                stack.append(v)
        if len(order) != n:
            raise InvalidTreeEdges("tree edges do not span the graph")
    order = np.array(order, dtype=np.int64)
    pre = np.empty(n, dtype=np.int64)
    pre[order] = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for v in order[:0:-1].tolist():
        size[parent[v]] += size[v]
    in_tree = np.zeros(G.m, dtype=bool)
    in_tree[edge_ids] = True

    levels = max(1, int(depth.max()).bit_length()) if n else 1
    up = np.empty((levels, n), dtype=np.int64)
    if n:
        up[0] = parent
        for k in range(1, levels):
            up[k] = up[k - 1][up[k - 1]]
    return SpanningTree(
        n=n,
        root=int(root),
        parent=parent,
        parent_edge=parent_edge,
        parent_sign=parent_sign,
        depth=depth,
        depth_resistance=dres,
        order=order,
        pre=pre,
        size=size,
        in_tree=in_tree,
        off_tree=np.flatnonzero(~in_tree),
        up=up,
    )


def _min_resistance_edges(G: WeightedGraph) -> np.ndarray:
    mat = sp.coo_matrix((G.r, (G.tail, G.head)), shape=(G.n, G.n)).tocsr()
    mst = minimum_spanning_tree(mat).tocoo()
    return np.array([G.edge_id(int(a), int(b)) for a, b in zip(mst.row, mst.col)], dtype=np.int64)


def _low_stretch_edges(G: WeightedGraph, rng: np.random.Generator) -> np.ndarray:
    """Ball-growing heuristic in the spirit of Alon-Karp-Peleg-West.

    Each round contracts the current clusters, keeps cross edges no longer than
    the current scale, and grows balls around every cluster with exponentially
    distributed head starts (multi-source Dijkstra). The shortest-path forest
    edges join the tree and their balls merge. The scale doubles per round.
    """
    n = G.n
    ds = DisjointSet(range(n))
    chosen = []
    r = G.r
    tail, head = G.tail, G.head
    scale = 2.0 * float(r.min())
    while ds.n_subsets > 1:
        label = np.array([ds[v] for v in range(n)], dtype=np.int64)
        cu, cv = label[tail], label[head]
        cross = cu != cv
        active = cross & (r <= scale)
        if not active.any():
            scale = max(2.0 * scale, float(r[cross].min()))
            continue
        # lightest edge per unordered cluster pair, ties by lower edge id
        best = {}
        for e in np.flatnonzero(active).tolist():
            a, b = int(cu[e]), int(cv[e])
            key = (a, b) if a < b else (b, a)
            if key not in best or r[e] < r[best[key]]:
                best[key] = e
        adj = {}
        for (a, b), e in best.items():
            adj.setdefault(a, []).append((b, e))
            adj.setdefault(b, []).append((a, e))
        nodes = sorted(adj)
        mean_shift = scale * max(1.0, math.log(len(nodes)))
        shift = rng.exponential(mean_shift, size=len(nodes))
        dist = {u: -s for u, s in zip(nodes, shift)}
        heap = [(d, u, -1) for u, d in dist.items()]
        heapq.heapify(heap)
        settled = set()
        merged = 0
        while heap:
            d, u, e = heapq.heappop(heap)
            if u in settled:
                continue
            settled.add(u)
            if e >= 0:
                chosen.append(e)
                ds.merge(int(tail[e]), int(head[e]))
                merged += 1
            for v, ev in adj[u]:
                nd = d + r[ev]
                if v not in settled and nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v, ev))
        if merged == 0 and not (cross & ~active).any():
            # Boruvka step so every full-scale round makes progress
            for u in nodes:
                v, e = min(adj[u], key=lambda t: (r[t[1]], t[1]))
                if ds[int(tail[e])] != ds[int(head[e])]:
                    chosen.append(e)
                    ds.merge(int(tail[e]), int(head[e]))
        scale *= 2.0
    return np.array(chosen, dtype=np.int64)


def build_tree(G: WeightedGraph, strategy: str = "low_stretch", edges=None, seed=0, root: int = 0) -> SpanningTree:
    """Construct a spanning tree of a connected graph.

    ``strategy`` is ``"low_stretch"`` (seeded ball-growing heuristic, no stretch
    guarantee), ``"min_resistance"`` (minimum total resistance tree) or
    ``"given"`` (``edges`` lists edge ids or vertex pairs, validated).
    """
    if not is_connected(G):
        raise GraphDisconnected("graph is not connected")
    if strategy == "given":
        if edges is None:
            raise InvalidTreeEdges("strategy 'given' needs edges")
        ids = []
        for e in edges:
            if isinstance(e, (tuple, list)):
                try:
                    ids.append(G.edge_id(int(e[0]), int(e[1])))
                except KeyError:
                    raise InvalidTreeEdges(f"({e[0]}, {e[1]}) is not an edge of the graph") from None
            else:
                ids.append(int(e))
        return tree_from_edges(G, ids, root)
    if G.n <= 1:
        return tree_from_edges(G, [], root)
    if strategy == "min_resistance":
        return tree_from_edges(G, _min_resistance_edges(G), root)
    if strategy == "low_stretch":
        return tree_from_edges(G, _low_stretch_edges(G, np.random.default_rng(seed)), root)
    raise ValueError(f"unknown tree strategy {strategy!r}")


def lca(T: SpanningTree, a: int, b: int) -> int:
    return int(lca_many(T, np.array([a]), np.array([b]))[0])


def lca_many(T: SpanningTree, a, b) -> np.ndarray:
    """Vectorised lowest common ancestors by binary lifting."""
    a = np.array(a, dtype=np.int64)
    b = np.array(b, dtype=np.int64)
    swap = T.depth[a] < T.depth[b]
    a[swap], b[swap] = b[swap], a[swap]
    diff = T.depth[a] - T.depth[b]
    for k in range(T.up.shape[0]):
        sel = ((diff >> k) & 1).astype(bool)
        a[sel] = T.up[k][a[sel]]
    for k in range(T.up.shape[0] - 1, -1, -1):
        ua, ub = T.up[k][a], T.up[k][b]
        sel = ua != ub
        a[sel] = ua[sel]
        b[sel] = ub[sel]
    neq = a != b
    a[neq] = T.parent[a[neq]]
    return a


def path_resistance(T: SpanningTree, a, b) -> np.ndarray:
    c = lca_many(T, a, b)
    dr = T.depth_resistance
    return dr[np.asarray(a)] + dr[np.asarray(b)] - 2.0 * dr[c]


def tree_path(T: SpanningTree, a: int, b: int):
    """Edges of the tree path from ``a`` to ``b`` as ``(edge_id, sign)`` pairs.

    ``sign`` is +1 when the walk traverses the edge along its graph orientation.
    """
    c = lca(T, a, b)
    up_part = []
    v = a
    while v != c:
        up_part.append((int(T.parent_edge[v]), -int(T.parent_sign[v])))
        v = int(T.parent[v])
    down_part = []
    v = b
    while v != c:
        down_part.append((int(T.parent_edge[v]), int(T.parent_sign[v])))
        v = int(T.parent[v])
    return up_part + down_part[::-1]


def compute_stretch(G: WeightedGraph, T: SpanningTree) -> StretchSummary:
    pr = path_resistance(T, G.tail, G.head)
    stretch = pr / G.r
    stretch[T.in_tree] = 1.0
    off = T.off_tree
    R = G.r[off] + pr[off]
    ratio = R / G.r[off]
    tau = float(ratio.sum())
    p = ratio / tau if len(off) else np.zeros(0)
    return StretchSummary(
        stretch=stretch,
        off_tree=off,
        cycle_resistance=R,
        total_stretch=float(stretch.sum()),
        tau=tau,
        p=p,
    )
