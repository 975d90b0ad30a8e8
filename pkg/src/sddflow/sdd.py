"""Reduction of symmetric diagonally dominant systems to Laplacian solves.

``A`` is split as ``D1 + Ap + An + D2`` and lifted to a Laplacian on ``2n``
vertices whose solution for demands ``(b, -b)`` gives ``x = (x1 - x2) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import (
    DecompositionInvariantViolated,
    DimensionMismatch,
    InconsistentSystem,
    NotDiagonallyDominant,
    NotSymmetric,
)
from .graph import WeightedGraph, build_graph
from .solver import SolverOptions, solve


@dataclass
class Decomposition:
    D1: sp.csr_matrix
    Ap: sp.csr_matrix
    An: sp.csr_matrix
    D2: sp.csr_matrix


def _as_csr(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {A.shape}")
    A.sum_duplicates()
    A.eliminate_zeros()
    return A


def validate_sdd(A) -> sp.csr_matrix:
    """Check exact symmetry and row dominance; returns ``A`` as CSR."""
    A = _as_csr(A)
    if (A != A.T).nnz:
        raise NotSymmetric("matrix is not symmetric")
    diag = A.diagonal()
    off = abs(A).sum(axis=1).A1 - np.abs(diag)
    scale = np.maximum(np.abs(diag), off)
    slack = diag - off
    bad = slack < -1e-12 * scale
    if bad.any():
        row = int(np.argmin(np.where(bad, slack / np.maximum(scale, 1e-300), np.inf)))
        raise NotDiagonallyDominant(
            f"row {row}: diagonal {diag[row]} below off-diagonal sum {off[row]}", row=row
        )
    return A


def decompose(A) -> Decomposition:
    """``D1`` holds off-diagonal absolute row sums; ``D2`` the leftover diagonal."""
    A = _as_csr(A)
    n = A.shape[0]
    offd = sp.triu(A, 1) + sp.tril(A, -1)
    offd = sp.csr_matrix(offd)
    Ap = offd.multiply(offd > 0).tocsr()
    An = offd.multiply(offd < 0).tocsr()
    d1 = abs(offd).sum(axis=1).A1
    D1 = sp.diags(d1, format="csr")
    d2 = A.diagonal() - d1
    scale = np.maximum(np.abs(A.diagonal()), d1)
    if np.any(d2 < -1e-12 * scale):
        raise DecompositionInvariantViolated("excess diagonal is negative; matrix is not diagonally dominant")
    d2 = np.maximum(d2, 0.0)
    D2 = sp.diags(d2, format="csr")
    lap = D1 + An - Ap
    if np.max(np.abs(lap.sum(axis=1).A1), initial=0.0) > 1e-12 * max(1.0, float(np.max(scale, initial=0.0))):
        raise DecompositionInvariantViolated("D1 + An - Ap does not have zero row sums")
    assert Ap.shape == (n, n)
    return Decomposition(D1=D1, Ap=Ap, An=An, D2=D2)


def augmented_edges(A):
    """Edges ``(i, j, conductance)`` of the ``2n``-vertex lifted graph."""
    dec = decompose(A)
    n = A.shape[0]
    edges = []
    An = sp.triu(dec.An, 1).tocoo()
    for i, j, v in zip(An.row.tolist(), An.col.tolist(), An.data.tolist()):
        edges.append((i, j, -v))
        edges.append((i + n, j + n, -v))
    Ap = sp.triu(dec.Ap, 1).tocoo()
    for i, j, v in zip(Ap.row.tolist(), Ap.col.tolist(), Ap.data.tolist()):
        edges.append((i, j + n, v))
        edges.append((j, i + n, v))
    d2 = dec.D2.diagonal()
    for i in np.flatnonzero(d2 > 0).tolist():
        edges.append((i, i + n, d2[i] / 2.0))
    return edges


def build_augmented_laplacian(A) -> WeightedGraph:
    A = _as_csr(A)
    n = A.shape[0]
    return build_graph(2 * n, [(a, b, 1.0 / c) for a, b, c in augmented_edges(A) if c > 0])


def augmented_matrix(A) -> np.ndarray:
    """Dense lifted Laplacian, mainly for checks."""
    A = _as_csr(A)
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    for a, b, c in augmented_edges(A):
        M[a, b] -= c
        M[b, a] -= c
        M[a, a] += c
        M[b, b] += c
    return M


def connected_components(G: WeightedGraph):
    """``(count, labels)`` for the graph's connected components."""
    if G.n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    adj = sp.coo_matrix((np.ones(G.m), (G.tail, G.head)), shape=(G.n, G.n))
    k, labels = csgraph.connected_components(adj, directed=False)
    return int(k), labels.astype(np.int64)


def _subgraph(G: WeightedGraph, verts: np.ndarray):
    local = -np.ones(G.n, dtype=np.int64)
    local[verts] = np.arange(len(verts))
    keep = (local[G.tail] >= 0) & (local[G.head] >= 0)
    edges = zip(local[G.tail[keep]].tolist(), local[G.head[keep]].tolist(), G.r[keep].tolist())
    return build_graph(len(verts), edges)


@dataclass
class SddSolution:
    x: np.ndarray
    lifted: np.ndarray
    reports: list  # per component with at least one edge


def solve_sdd(A, b, options: SolverOptions | None = None) -> SddSolution:
    """Approximately solve ``A x = b`` via the lifted Laplacian, one component at a time."""
    options = options or SolverOptions()
    A = validate_sdd(A)
    n = A.shape[0]
    b = np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise DimensionMismatch(f"right-hand side has shape {b.shape}, expected ({n},)")
    G = build_augmented_laplacian(A)
    chi = np.concatenate([b, -b])
    count, labels = connected_components(G)
    lifted = np.zeros(2 * n)
    reports = []
    tol_scale = 1e-9 * (1.0 + float(np.max(np.abs(chi), initial=0.0)))
    for c in range(count):
        verts = np.flatnonzero(labels == c)
        sub = chi[verts]
        if abs(float(sub.sum())) > tol_scale * max(1.0, np.sqrt(len(verts))):
            raise InconsistentSystem("right-hand side is not in the range of the matrix")
        if len(verts) == 1:
            continue
        H = _subgraph(G, verts)
        rep = solve(H, sub - sub.mean(), options)
        v = rep.voltages
        lifted[verts] = v - v.mean()
        reports.append(rep)
    x = (lifted[:n] - lifted[n:]) / 2.0
    return SddSolution(x=x, lifted=lifted, reports=reports)
