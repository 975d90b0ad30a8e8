import numpy as np
import pytest

from sddflow.errors import InconsistentSystem, NotDiagonallyDominant, NotSymmetric
from sddflow.generators import random_sdd
from sddflow.graph import build_graph
from sddflow.sdd import (
    augmented_matrix,
    build_augmented_laplacian,
    connected_components,
    decompose,
    solve_sdd,
    validate_sdd,
)
from sddflow.solver import SolverOptions


def test_validate_examples():
    validate_sdd(np.array([[2.0, -1], [-1, 2]]))
    validate_sdd(np.array([[1.0, 1], [1, 1]]))
    with pytest.raises(NotSymmetric):
        validate_sdd(np.array([[2.0, -1], [0, 2]]))
    with pytest.raises(NotDiagonallyDominant) as info:
        validate_sdd(np.array([[2.0, 0, 0], [0, 1, -1.5], [0, -1.5, 3]]))
    assert info.value.row == 1


def test_decompose_parts():
    A = np.array([[4.0, 1, -2], [1, 3, 0], [-2, 0, 2]])
    dec = decompose(A)
    assert np.allclose(dec.D1.diagonal(), [3, 1, 2])
    assert np.allclose(dec.D2.diagonal(), [1, 2, 0])
    assert np.allclose(dec.Ap.toarray(), [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert np.allclose(dec.An.toarray(), [[0, 0, -2], [0, 0, 0], [-2, 0, 0]])
    total = dec.D1 + dec.Ap + dec.An + dec.D2
    assert np.allclose(total.toarray(), A)


def test_augmented_fixture():
    M = augmented_matrix(np.array([[2.0, 1], [1, 3]]))
    # Ap edges cross sides, the excess diagonal becomes a half-weight cross edge
    want = np.array(
        [
            [1.5, 0, -0.5, -1],
            [0, 2, -1, -1],
            [-0.5, -1, 1.5, 0],
            [-1, -1, 0, 2],
        ]
    )
    assert np.allclose(M, want)
    assert np.allclose(M.sum(axis=1), 0)


def test_single_diagonal_entry():
    G = build_augmented_laplacian(np.array([[2.0]]))
    assert G.n == 2 and G.m == 1 and G.r[0] == pytest.approx(1.0)
    x = solve_sdd(np.array([[2.0]]), [4.0], SolverOptions(eps=1e-6)).x
    assert x == pytest.approx([2.0])


def test_small_fixture():
    x = solve_sdd(np.array([[2.0, 1], [1, 3]]), [1.0, 0.0], SolverOptions(eps=1e-6)).x
    assert np.allclose(x, [0.6, -0.2], atol=1e-4)


def test_laplacian_input_splits_into_copies():
    L = np.array([[2.0, -1, -1], [-1, 2, -1], [-1, -1, 2]])
    G = build_augmented_laplacian(L)
    assert connected_components(G)[0] == 2
    b = np.array([1.0, 0, -1])
    sol = solve_sdd(L, b, SolverOptions(eps=1e-8))
    assert np.allclose(L @ sol.x, b, atol=1e-6)


def test_inconsistent_system():
    L = np.array([[1.0, -1], [-1, 1]])
    with pytest.raises(InconsistentSystem):
        solve_sdd(L, [1.0, 0.0])


def test_connected_components_examples():
    G = build_graph(5, [(0, 1, 1.0), (3, 4, 1.0)])
    k, labels = connected_components(G)
    assert k == 3
    assert labels[0] == labels[1] and labels[3] == labels[4] and len(set(labels.tolist())) == 3


@pytest.mark.parametrize("seed", range(5))
def test_exact_lift_recovers_solution(seed):
    A = random_sdd(12, 0.3, seed)
    b = np.random.default_rng(seed).standard_normal(12)
    M = augmented_matrix(A)
    assert np.max(np.abs(M.sum(axis=1))) <= 1e-12 * np.abs(A).max()
    off = M - np.diag(np.diag(M))
    assert off.max() <= 0
    y = np.linalg.lstsq(M, np.r_[b, -b], rcond=None)[0]
    x = (y[:12] - y[12:]) / 2
    assert np.allclose(x, np.linalg.solve(A, b), atol=1e-8)
