"""Text formats: edge lists, Matrix Market Laplacians, vectors and trees."""

from __future__ import annotations

import io as _io
import math
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import (
    DemandNotBalanced,
    InconsistentLaplacian,
    InputError,
    LengthMismatch,
    ParseError,
)
from .graph import WeightedGraph, build_graph
from .tree import SpanningTree, tree_from_edges


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _is_matrix_market(text: str) -> bool:
    return text.lstrip().startswith("%%MatrixMarket")


def parse_graph_text(text: str) -> WeightedGraph:
    if _is_matrix_market(text):
        return laplacian_to_graph(read_matrix_market(text))
    n = m = None
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if n is None:
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "graph":
                raise ParseError("expected header 'p graph <n> <m>'", line=lineno)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError("header counts must be integers", line=lineno) from None
            if n < 0 or m < 0:
                raise ParseError("header counts must be non-negative", line=lineno)
            continue
        if len(parts) != 3:
            raise ParseError("expected '<a> <b> <resistance>'", line=lineno)
        try:
            a, b, r = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"cannot parse edge {s!r}", line=lineno) from None
        try:
            build_graph(n, [(a, b, r)])
        except InputError as exc:
            # keep the specific error type, add the location
            err = type(exc)(f"line {lineno}: {exc}")
            err.line = lineno
            raise err from None
        edges.append((a, b, r))
    if n is None:
        raise ParseError("missing 'p graph' header")
    if len(edges) != m:
        raise ParseError(f"header promises {m} edges, found {len(edges)}")
    return build_graph(n, edges)


def parse_graph(path) -> WeightedGraph:
    return parse_graph_text(_read_text(path))


def read_matrix_market(text: str) -> sp.csr_matrix:
    try:
        M = scipy.io.mmread(_io.StringIO(text))
    except Exception as exc:  # scipy raises plain ValueError / IndexError here
        raise ParseError(f"invalid Matrix Market data: {exc}") from None
    return sp.csr_matrix(M, dtype=float)


def laplacian_to_graph(L) -> WeightedGraph:
    """Graph whose Laplacian is ``L``; off-diagonals become conductances."""
    L = sp.csr_matrix(L, dtype=float)
    n = L.shape[0]
    if L.shape != (n, n):
        raise InconsistentLaplacian(f"Laplacian must be square, got {L.shape}")
    if (abs(L - L.T) > 0).nnz:
        raise InconsistentLaplacian("Laplacian is not symmetric")
    U = sp.triu(L, 1).tocoo()
    if np.any(U.data > 0):
        raise InconsistentLaplacian("Laplacian has a positive off-diagonal entry")
    keep = U.data < 0
    rows, cols, vals = U.row[keep], U.col[keep], U.data[keep]
    deg = np.bincount(rows, -vals, n) + np.bincount(cols, -vals, n)
    diag = L.diagonal()
    if np.any(np.abs(diag - deg) > 1e-9 * np.maximum(1.0, np.abs(diag))):
        bad = int(np.argmax(np.abs(diag - deg)))
        raise InconsistentLaplacian(f"row {bad}: diagonal {diag[bad]} does not match degree {deg[bad]}")
    return build_graph(n, [(int(a), int(b), 1.0 / -v) for a, b, v in zip(rows, cols, vals)])


def emit_graph(G: WeightedGraph) -> str:
    lines = [f"p graph {G.n} {G.m}"]
    lines += [f"{a} {b} {r!r}" for a, b, r in G.edges()]
    return "\n".join(lines) + "\n"


def emit_laplacian_mm(G: WeightedGraph) -> str:
    """Symmetric Matrix Market coordinate form of the Laplacian (lower triangle)."""
    lines = ["%%MatrixMarket matrix coordinate real symmetric"]
    deg = np.bincount(G.tail, G.w, G.n) + np.bincount(G.head, G.w, G.n)
    entries = [(i, i, float(deg[i])) for i in range(G.n)]
    entries += [(int(h), int(t), -float(w)) for t, h, w in zip(G.tail, G.head, G.w)]
    lines.append(f"{G.n} {G.n} {len(entries)}")
    lines += [f"{i + 1} {j + 1} {v!r}" for i, j, v in entries]
    return "\n".join(lines) + "\n"


def parse_matrix(path) -> sp.csr_matrix:
    """Matrix Market file, or a dense whitespace-separated table."""
    text = _read_text(path)
    if _is_matrix_market(text):
        return read_matrix_market(text)
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            rows.append([float(x) for x in s.split()])
        except ValueError:
            raise ParseError(f"cannot parse row {s!r}", line=lineno) from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ParseError("dense matrix must be square")
    return sp.csr_matrix(np.array(rows))


def parse_vector_text(text: str, n: int, demand: bool = False) -> np.ndarray:
    vals = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            x = float(s)
        except ValueError:
            raise ParseError(f"cannot parse number {s!r}", line=lineno) from None
        if not math.isfinite(x):
            raise ParseError("non-finite value", line=lineno)
        vals.append(x)
    if len(vals) != n:
        raise LengthMismatch(f"expected {n} values, found {len(vals)}")
    v = np.array(vals, dtype=float)
    if demand:
        tol = 1e-9 * (1.0 + (float(np.max(np.abs(v))) if n else 0.0)) * max(1.0, math.sqrt(n))
        if abs(float(v.sum())) > tol:
            raise DemandNotBalanced(f"demands sum to {v.sum():.3e}, expected 0")
    return v


def parse_vector(path, n: int, demand: bool = False) -> np.ndarray:
    return parse_vector_text(_read_text(path), n, demand)


def emit_vector(x) -> str:
    return "".join(f"{float(v)!r}\n" for v in np.asarray(x, dtype=float))


def emit_tree(T: SpanningTree) -> str:
    """One line ``parent edge_sign`` per vertex; the root is its own parent with sign 0."""
    return "".join(f"{int(p)} {int(s)}\n" for p, s in zip(T.parent, T.parent_sign))


def parse_tree_text(text: str, G: WeightedGraph) -> SpanningTree:
    parents = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) not in (1, 2):
            raise ParseError("expected '<parent> [edge_sign]'", line=lineno)
        try:
            parents.append((int(parts[0]), lineno))
        except ValueError:
            raise ParseError(f"cannot parse parent {parts[0]!r}", line=lineno) from None
    if len(parents) != G.n:
        raise LengthMismatch(f"tree file lists {len(parents)} vertices, graph has {G.n}")
    roots = [v for v, (p, _) in enumerate(parents) if p == v]
    if len(roots) != 1:
        raise ParseError(f"tree file must have exactly one root, found {len(roots)}")
    ids = []
    for v, (p, lineno) in enumerate(parents):
        if p == v:
            continue
        try:
            ids.append(G.edge_id(v, p))
        except KeyError:
            raise ParseError(f"({p}, {v}) is not an edge of the graph", line=lineno) from None
    return tree_from_edges(G, ids, roots[0])


def parse_tree(path, G: WeightedGraph) -> SpanningTree:
    return parse_tree_text(_read_text(path), G)
