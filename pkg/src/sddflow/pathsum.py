"""Separator-decomposition structure for root-path flow sums on a static tree.

``update(a, alpha)`` adds ``alpha`` to the flow on every tree edge of the path
from the root down to ``a``. ``query(a)`` returns the tree-induced voltage of
``a``: the resistance-weighted flow summed along the path from ``a`` up to the
root, which is the negative of the root-to-``a`` sum the recursion maintains.
Both touch one decomposition node per recursion level.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from . import _kernels as K
from .errors import TooSmall
from .graph import WeightedGraph
from .tree import SpanningTree

KIND_T0, KIND_PLUS, KIND_BASE = K.KIND_T0, K.KIND_PLUS, K.KIND_BASE


def tree_decompose(T: SpanningTree, vertices, root: int):
    """Split a connected piece of ``T`` at a balanced separator.

    ``vertices`` must induce a connected subtree whose highest vertex is
    ``root``. Returns ``(d, t0, subtrees)``: ``t0`` is the part above ``d``
    (rooted at ``root``, containing ``d`` as a leaf) or ``None`` when
    ``d == root``; ``subtrees`` holds one vertex array per child of ``d``, each
    rooted at ``d``. Every part has at most ``len(vertices) / 2 + 1`` vertices.
    A two-vertex piece returns ``d != root`` and no parts.
    """
    P = np.sort(T.pre[np.asarray(vertices, dtype=np.int64)])
    k = len(P)
    if k < 2:
        raise TooSmall("tree_decompose needs at least two vertices")
    verts = T.order[P]
    if verts[0] != root:
        raise ValueError("root must be the highest vertex of the piece")
    if k == 2:
        return int(verts[1]), None, []
    d_idx, local = _separator_index(T, P)
    return _split(T, verts, P, local, d_idx)


def _separator_index(T, P):
    k = len(P)
    verts = T.order[P]
    local = np.searchsorted(P, P + T.size[verts]) - np.arange(k)
    heavy = np.flatnonzero(local * 2 > k)
    return int(heavy[np.argmin(local[heavy])]), local


def _split(T, verts, P, local, d_idx):
    d = int(verts[d_idx])
    hi = d_idx + int(local[d_idx])
    t0 = None
    if d_idx > 0:
        t0 = np.concatenate([verts[: d_idx + 1], verts[hi:]])
    subtrees = []
    j = d_idx + 1
    while j < hi:
        end = j + int(local[j])
        subtrees.append(np.concatenate([verts[d_idx : d_idx + 1], verts[j:end]]))
        j = end
    return d, t0, subtrees


class PathSumTree:
    """Recursive separator decomposition of a rooted tree (see module docstring).

    Node ``i`` stores ``ext[i]`` (flow pushed through its whole root-to-separator
    path by updates below the separator) and ``drop[i]`` (potential drop along
    that path). Membership ``j`` of vertex ``a`` records the node, the height of
    ``a`` in it and whether ``a`` lies above the separator.
    """

    def __init__(self, T: SpanningTree, check_balance: bool = True):
        self.n = T.n
        self.root = T.root
        roots, seps, sizes, bases, t0_child, children = [], [], [], [], [], []
        level = []
        rec_v, rec_node, rec_kind, rec_h = [], [], [], []
        dres = T.depth_resistance
        pre, order, gsize = T.pre, T.order, T.size

        # work items: (sorted preorder positions, parent node, excluded vertices)
        work = []
        if T.n >= 2:
            work.append((np.arange(T.n, dtype=np.int64), -1, (), False))
        while work:
            P, parent_node, excluded, is_t0 = work.pop()
            i = len(roots)
            k = len(P)
            verts = order[P]
            s = int(verts[0])
            level.append(level[parent_node] + 1 if parent_node >= 0 else 0)
            if parent_node >= 0:
                children[parent_node].append(i)
                if is_t0:
                    t0_child[parent_node] = i
            if k == 2:
                d = int(verts[1])
                roots.append(s)
                seps.append(d)
                sizes.append(2)
                bases.append(True)
                t0_child.append(-1)
                children.append([])
                if d not in excluded:
                    rec_v.append(np.array([d]))
                    rec_node.append(np.array([i]))
                    rec_kind.append(np.array([KIND_BASE], dtype=np.int8))
                    rec_h.append(np.array([dres[d] - dres[s]]))
                continue
            d_idx, local = _separator_index(T, P)
            d = int(verts[d_idx])
            hi = d_idx + int(local[d_idx])
            roots.append(s)
            seps.append(d)
            sizes.append(k)
            bases.append(False)
            children.append([])

            # height(a) = resistance of P(s, lca(a, d)) measured from s
            anc = np.flatnonzero((P <= P[d_idx]) & (P + gsize[verts] > P[d_idx]))
            anc_start = P[anc]
            anc_end_rev = (P[anc] + gsize[verts[anc]])[::-1]
            cnt_start = np.searchsorted(anc_start, P, side="right")
            cnt_end = len(anc) - np.searchsorted(anc_end_rev, P, side="right")
            lca_idx = anc[np.minimum(cnt_start, cnt_end) - 1]
            height = dres[verts[lca_idx]] - dres[s]

            kind = np.full(k, KIND_PLUS, dtype=np.int8)
            if d_idx > 0:
                kind[:d_idx] = KIND_T0
                kind[hi:] = KIND_T0
            member = np.ones(k, dtype=bool)
            member[0] = False
            if excluded:
                ex = pre[np.array(excluded, dtype=np.int64)]
                pos = np.minimum(np.searchsorted(P, ex), k - 1)
                member[pos[P[pos] == ex]] = False
            rec_v.append(verts[member])
            rec_node.append(np.full(int(member.sum()), i, dtype=np.int64))
            rec_kind.append(kind[member])
            rec_h.append(height[member])

            if d_idx > 0:
                t0_child.append(-1)  # set when the child is created
                P0 = np.concatenate([P[: d_idx + 1], P[hi:]])
                if check_balance:
                    assert len(P0) <= k / 2 + 1
                sub_excl = tuple(v for v in excluded if v != s) + (d,)
                work.append((P0, i, sub_excl, True))
            else:
                t0_child.append(-1)
            j = d_idx + 1
            while j < hi:
                end = j + int(local[j])
                Pc = np.concatenate([P[d_idx : d_idx + 1], P[j:end]])
                if check_balance:
                    assert len(Pc) <= k / 2 + 1
                work.append((Pc, i, excluded, False))
                j = end

        # renumber nodes level by level: the heavily shared upper levels then
        # occupy few cache lines
        num = len(roots)
        new_order = np.lexsort((np.arange(num), np.array(level, dtype=np.int64)))
        rank = np.empty(num, dtype=np.int64)
        rank[new_order] = np.arange(num)
        self.node_root = np.array(roots, dtype=np.int64)[new_order]
        self.node_sep = np.array(seps, dtype=np.int64)[new_order]
        self.node_size = np.array(sizes, dtype=np.int64)[new_order]
        self.node_base = np.array(bases, dtype=bool)[new_order]
        self.node_level = np.array(level, dtype=np.int64)[new_order]
        self.children = [rank[children[i]].tolist() for i in new_order.tolist()]
        t0 = np.array(t0_child, dtype=np.int64)[new_order]
        self.t0_child = np.where(t0 >= 0, rank[np.maximum(t0, 0)], -1)
        self.num_nodes = num
        self.ext = np.zeros(self.num_nodes)
        self.drop = np.zeros(self.num_nodes)

        if rec_v:
            v_all = np.concatenate(rec_v)
            perm = np.argsort(v_all, kind="stable")
            self.mem_node = rank[np.concatenate(rec_node)[perm]]
            self.mem_kind = np.concatenate(rec_kind)[perm].astype(np.int8)
            self.mem_height = np.concatenate(rec_h)[perm].astype(float)
            counts = np.bincount(v_all, minlength=self.n)
        else:
            self.mem_node = np.zeros(0, dtype=np.int64)
            self.mem_kind = np.zeros(0, dtype=np.int8)
            self.mem_height = np.zeros(0)
            counts = np.zeros(self.n, dtype=np.int64)
        self.mem_ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.mem_ptr[1:])

    # recursive semantics -------------------------------------------------

    def memberships(self, a: int):
        """``(node, kind, height)`` for each node ``a`` reaches, top-down."""
        lo, hi = self.mem_ptr[a], self.mem_ptr[a + 1]
        return list(zip(self.mem_node[lo:hi].tolist(), self.mem_kind[lo:hi].tolist(), self.mem_height[lo:hi].tolist()))

    def touched(self, a: int) -> int:
        return int(self.mem_ptr[a + 1] - self.mem_ptr[a])

    def raw_query(self, a: int) -> float:
        """Resistance-weighted flow along the root-to-``a`` path.

        Walks ``a``'s memberships top-down, stopping at the node whose
        separator is ``a``; terms are added in that order.
        """
        s = 0.0
        for j in range(self.mem_ptr[a], self.mem_ptr[a + 1]):
            i = self.mem_node[j]
            if a == self.node_sep[i] or self.mem_kind[j] != KIND_T0:
                s += self.drop[i]
                if a == self.node_sep[i]:
                    break
            else:
                s += self.ext[i] * self.mem_height[j]
        return float(s)

    def _update_from(self, a, j, alpha):
        if j == self.mem_ptr[a + 1]:
            return
        i = self.mem_node[j]
        self.drop[i] += alpha * self.mem_height[j]
        if self.node_base[i]:
            return
        if self.mem_kind[j] != KIND_T0:
            self.ext[i] += alpha
        if a != self.node_sep[i]:
            self._update_from(a, j + 1, alpha)

    def query(self, a: int) -> float:
        return -self.raw_query(a)

    def update(self, a: int, alpha: float) -> None:
        self._update_from(a, self.mem_ptr[a], float(alpha))

    def reset(self) -> None:
        self.ext[:] = 0.0
        self.drop[:] = 0.0

    def voltages(self) -> np.ndarray:
        return np.array([self.query(a) for a in range(self.n)])


def ds_init(T: SpanningTree, s=None) -> PathSumTree:
    if s is not None and s != T.root:
        raise ValueError("the structure is rooted at the tree's root; rebuild the tree to change it")
    return PathSumTree(T)


def ds_query(D: PathSumTree, a: int) -> float:
    return D.query(a)


def ds_update(D: PathSumTree, a: int, alpha: float) -> None:
    D.update(a, alpha)


class FlatPathSum:
    """Vector form: ``query(a) = Q[a] . x`` and ``update(a, alpha): x += alpha U[a]``.

    Column ``2*i`` holds node ``i``'s pushed-through flow, column ``2*i + 1`` its
    separator potential drop.
    """

    def __init__(self, D: PathSumTree):
        self.n = D.n
        self.dim = 2 * D.num_nodes
        rows = np.repeat(np.arange(D.n), np.diff(D.mem_ptr))
        node, kind, h = D.mem_node, D.mem_kind, D.mem_height
        t0 = kind == KIND_T0
        q_cols = np.where(t0, 2 * node, 2 * node + 1)
        q_vals = -np.where(t0, h, 1.0)
        self.Q = sp.csr_matrix((q_vals, (rows, q_cols)), shape=(D.n, self.dim))
        plus = kind == KIND_PLUS
        u_rows = np.concatenate([rows, rows[plus]])
        u_cols = np.concatenate([2 * node + 1, 2 * node[plus]])
        u_vals = np.concatenate([h, np.ones(int(plus.sum()))])
        self.U = sp.csr_matrix((u_vals, (u_rows, u_cols)), shape=(D.n, self.dim))
        self.x = np.zeros(self.dim)

    def support(self, a: int):
        return self.Q.indptr[a + 1] - self.Q.indptr[a], self.U.indptr[a + 1] - self.U.indptr[a]

    def query(self, a: int) -> float:
        lo, hi = self.Q.indptr[a], self.Q.indptr[a + 1]
        s = 0.0
        for v in (self.Q.data[lo:hi] * self.x[self.Q.indices[lo:hi]]).tolist():
            s += v
        return s

    def update(self, a: int, alpha: float) -> None:
        lo, hi = self.U.indptr[a], self.U.indptr[a + 1]
        self.x[self.U.indices[lo:hi]] += alpha * self.U.data[lo:hi]


def flatten(D: PathSumTree) -> FlatPathSum:
    return FlatPathSum(D)


class NaivePathSum:
    """Reference implementation that walks tree paths edge by edge."""

    def __init__(self, T: SpanningTree, r):
        self.T = T
        self.r = np.asarray(r, dtype=float)
        self.down = np.zeros(T.n)  # flow on the parent edge, oriented away from the root

    def update(self, a: int, alpha: float) -> None:
        parent = self.T.parent
        while a != self.T.root:
            self.down[a] += alpha
            a = int(parent[a])

    def query(self, a: int) -> float:
        parent, pe = self.T.parent, self.T.parent_edge
        s = 0.0
        while a != self.T.root:
            s -= self.down[a] * self.r[pe[a]]
            a = int(parent[a])
        return s


class FastPathSum:
    """Compiled-kernel view of a :class:`PathSumTree`, used by the solvers."""

    def __init__(self, D: PathSumTree):
        self.D = D
        self.ptr = D.mem_ptr
        self.mem = K.pack_memberships(D.mem_node, D.mem_kind, D.mem_height)
        self.x = np.zeros(2 * D.num_nodes)

    def raw_query(self, a: int) -> float:
        return K.query_raw(self.ptr, self.mem, self.x, a)

    def query(self, a: int) -> float:
        return -self.raw_query(a)

    def update(self, a: int, alpha: float) -> None:
        K.update_raw(self.ptr, self.mem, self.x, a, float(alpha))

    def voltages(self) -> np.ndarray:
        return -K.query_all_raw(self.ptr, self.mem, self.x, self.D.n)

    def load_demands(self, chi) -> None:
        """Add the unique tree routing of ``chi`` to the current tree flow."""
        chi = np.asarray(chi, dtype=float)
        for a in np.flatnonzero(chi).tolist():
            K.update_raw(self.ptr, self.mem, self.x, a, -chi[a])


def max_memberships(n: int) -> int:
    return math.ceil(math.log2(n)) + 1 if n > 1 else 0


def compute_all_cycle_resistances(G: WeightedGraph, T: SpanningTree, D: PathSumTree | None = None) -> np.ndarray:
    """Cycle resistance of every off-tree edge, in ``T.off_tree`` order.

    A unit flow from ``a`` to ``b`` through the tree is loaded with two updates,
    read back with two queries and then removed again.
    """
    fast = FastPathSum(D if D is not None else PathSumTree(T))
    out = np.empty(len(T.off_tree))
    for k, e in enumerate(T.off_tree.tolist()):
        a, b = int(G.tail[e]), int(G.head[e])
        fast.update(b, 1.0)
        fast.update(a, -1.0)
        out[k] = fast.raw_query(b) - fast.raw_query(a) + G.r[e]
        fast.update(b, -1.0)
        fast.update(a, 1.0)
    return out


def materialize_tree_flows(D, G: WeightedGraph, T: SpanningTree) -> np.ndarray:
    """Full-length flow vector, zero off the tree, from the structure's voltages."""
    v = D.voltages()
    f = np.zeros(G.m)
    te = T.tree_edges
    f[te] = (v[G.tail[te]] - v[G.head[te]]) / G.r[te]
    return f
