"""Dense reference computations for small instances (test and verification only)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TooLarge
from .graph import WeightedGraph, dual_energy, energy, incidence_matrix, laplacian_matrix
from .tree import SpanningTree, compute_stretch, tree_path

DEFAULT_CAP = 2000


@dataclass
class OracleResult:
    flow: np.ndarray
    voltages: np.ndarray  # L^+ chi, zero mean on every component
    energy: float
    dual_energy: float
    eigenvalues: np.ndarray
    condition: float  # largest over smallest nonzero eigenvalue


def pinv_laplacian(L: np.ndarray, rtol: float = 1e-10):
    """Pseudoinverse of a symmetric PSD matrix by eigendecomposition."""
    lam, U = np.linalg.eigh(L)
    cut = rtol * max(float(lam[-1]), 1.0) if lam.size else 0.0
    keep = lam > cut
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    return (U * inv) @ U.T, lam, keep


def dense_oracle(G: WeightedGraph, chi, cap: int = DEFAULT_CAP) -> OracleResult:
    if G.n > cap:
        raise TooLarge(f"dense oracle limited to n <= {cap}, got {G.n}")
    chi = np.asarray(chi, dtype=float)
    L = laplacian_matrix(G).toarray()
    Lp, lam, keep = pinv_laplacian(L)
    v = Lp @ chi
    f = (v[G.tail] - v[G.head]) / G.r
    e = energy(G, f)
    de = dual_energy(G, v, chi)
    scale = max(abs(e), abs(de), 1e-300)
    if abs(e - de) > 1e-8 * scale and max(abs(e), abs(de)) > 1e-12:
        raise AssertionError(f"strong duality violated: {e} vs {de}")
    nz = lam[keep]
    cond = float(nz[-1] / nz[0]) if nz.size else 1.0
    return OracleResult(flow=f, voltages=v, energy=e, dual_energy=de, eigenvalues=lam, condition=cond)


def l_norm(G: WeightedGraph, x) -> float:
    x = np.asarray(x, dtype=float)
    d = x[G.tail] - x[G.head]
    return math.sqrt(max(0.0, float(np.dot(d / G.r, d))))


def cycle_vectors(G: WeightedGraph, T: SpanningTree) -> np.ndarray:
    """Rows are the tree cycles ``c_e`` of the off-tree edges, in ``T.off_tree`` order.

    ``c_e`` is one unit on ``e = (a, b)`` plus the tree path from ``b`` back to ``a``.
    """
    C = np.zeros((len(T.off_tree), G.m))
    for k, e in enumerate(T.off_tree.tolist()):
        C[k, e] = 1.0
        for edge, sign in tree_path(T, int(G.head[e]), int(G.tail[e])):
            C[k, edge] += sign
    return C


def build_projection_matrices(G: WeightedGraph, T: SpanningTree, cap: int = 50, check: bool = True):
    """Dense ``Pi_G`` and the rank-(m-1) cycle projections ``Pi_e``.

    Returns ``(Pi_G, {edge_id: Pi_e})``.
    """
    if G.n > cap:
        raise TooLarge(f"projection matrices limited to n <= {cap}, got {G.n}")
    B = incidence_matrix(G).toarray()
    L = laplacian_matrix(G).toarray()
    Lp, _, _ = pinv_laplacian(L)
    rs = np.sqrt(G.r)
    Bh = B / rs[:, None]
    PiG = Bh @ Lp @ Bh.T
    C = cycle_vectors(G, T)
    eye = np.eye(G.m)
    proj = {}
    for k, e in enumerate(T.off_tree.tolist()):
        c = C[k] * rs
        c = c / np.linalg.norm(c)
        proj[e] = eye - np.outer(c, c)
    if check:
        for P in [PiG, *proj.values()]:
            assert np.allclose(P, P.T, atol=1e-9)
            assert np.allclose(P @ P, P, atol=1e-9)
    return PiG, proj


def unit_cycle_vectors(G: WeightedGraph, T: SpanningTree) -> np.ndarray:
    """Rows ``R^{1/2} c_e / |c_e|_R``; each ``Pi_e`` is ``I - c c^T`` for its row."""
    C = cycle_vectors(G, T) * np.sqrt(G.r)
    return C / np.linalg.norm(C, axis=1, keepdims=True)


def operator_iterations(tau: float, n: int, eps: float, p: float) -> int:
    return max(0, math.ceil(tau * math.log(n / (eps * p))))


def operator_trial(G: WeightedGraph, T: SpanningTree, PiG, K: int, rng, chat=None) -> float:
    """``|Pi_{e_K} ... Pi_{e_1} - Pi_G|_F^2`` for ``K`` edges drawn from the sampling weights."""
    if chat is None:
        chat = unit_cycle_vectors(G, T)
    p = compute_stretch(G, T).p
    picks = rng.choice(len(p), size=K, p=p)
    M = np.eye(G.m)
    for k in picks.tolist():
        c = chat[k]
        M -= np.outer(c, c @ M)
    return float(np.sum((M - PiG) ** 2))


def operator_check(G: WeightedGraph, T: SpanningTree, eps=0.1, p=0.25, trials=100, seed=0):
    """Fraction of trials whose squared Frobenius error is at most ``eps``."""
    PiG, _ = build_projection_matrices(G, T, check=False)
    chat = unit_cycle_vectors(G, T)
    K = operator_iterations(compute_stretch(G, T).tau, G.n, eps, p)
    rng = np.random.default_rng(seed)
    errs = np.array([operator_trial(G, T, PiG, K, rng, chat) for _ in range(trials)])
    return float(np.mean(errs <= eps)), errs, K
