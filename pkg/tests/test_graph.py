import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sddflow.errors import (
    DimensionMismatch,
    InfeasibleFlow,
    NonpositiveResistance,
    SelfLoop,
    VertexOutOfRange,
)
from sddflow.generators import random_connected_graph, random_demand
from sddflow.graph import (
    apply_laplacian,
    build_graph,
    check_feasible,
    divergence,
    dual_energy,
    duality_gap,
    energy,
    incidence_matrix,
    laplacian_matrix,
)
from sddflow.oracle import dense_oracle


def test_parallel_edges_merge_by_conductance():
    G = build_graph(2, [(1, 0, 2.0), (0, 1, 2.0)])
    assert G.m == 1
    assert G.tail[0] == 0 and G.head[0] == 1
    assert G.r[0] == pytest.approx(1.0)


def test_edge_order_and_exact_resistance_kept():
    G = build_graph(3, [(2, 1, 0.1), (0, 1, 0.3)])
    assert G.edges() == [(1, 2, 0.1), (0, 1, 0.3)]


@pytest.mark.parametrize(
    "edges, err",
    [
        ([(0, 0, 1.0)], SelfLoop),
        ([(0, 1, 0.0)], NonpositiveResistance),
        ([(0, 1, -1.0)], NonpositiveResistance),
        ([(0, 1, float("inf"))], NonpositiveResistance),
        ([(0, 3, 1.0)], VertexOutOfRange),
    ],
)
def test_build_graph_rejects(edges, err):
    with pytest.raises(err):
        build_graph(3, edges)


def test_divergence_is_net_outflow(k3):
    G, _, chi = k3
    f0 = np.array([1.0, 1.0, 0.0])
    assert np.array_equal(divergence(G, f0), chi)
    single = build_graph(2, [(0, 1, 1.0)])
    assert np.allclose(divergence(single, [2.5]), [2.5, -2.5])


def test_divergence_dimension_check(k3):
    G, _, _ = k3
    with pytest.raises(DimensionMismatch):
        divergence(G, [1.0, 2.0])


def test_laplacian_matches_incidence_product():
    G = random_connected_graph(12, 30, seed=3)
    B = incidence_matrix(G).toarray()
    L = laplacian_matrix(G).toarray()
    assert np.allclose(L, B.T @ np.diag(1 / G.r) @ B)
    x = np.random.default_rng(0).standard_normal(G.n)
    assert np.allclose(apply_laplacian(G, x), L @ x)
    assert np.allclose(L.sum(axis=1), 0)


def test_energy_and_gap_on_k3(k3):
    G, _, chi = k3
    f0 = np.array([1.0, 1.0, 0.0])
    assert energy(G, f0) == 2.0
    # zero voltages give zero dual energy, so the gap is the energy itself
    assert duality_gap(G, f0, np.zeros(3), chi) == 2.0
    opt = np.array([1 / 3, 1 / 3, 2 / 3])
    v = np.array([0.0, -1 / 3, -2 / 3])
    assert energy(G, opt) == pytest.approx(2 / 3)
    assert dual_energy(G, v, chi) == pytest.approx(2 / 3)
    assert duality_gap(G, opt, v, chi) == pytest.approx(0.0, abs=1e-15)


def test_gap_with_tree_voltages_at_initial_flow(k3):
    # f0 induces v = (0, -1, -2); the gap equals the squared cycle potential over r
    G, _, chi = k3
    f0 = np.array([1.0, 1.0, 0.0])
    assert duality_gap(G, f0, np.array([0.0, -1.0, -2.0]), chi) == pytest.approx(4.0)


def test_duality_gap_rejects_infeasible(k3):
    G, _, chi = k3
    with pytest.raises(InfeasibleFlow):
        duality_gap(G, np.zeros(3), np.zeros(3), chi)


def test_check_feasible_reports_residual(k3):
    G, _, chi = k3
    ok, resid = check_feasible(G, [1.0, 1.0, 0.0], chi)
    assert ok and resid == 0.0
    ok, resid = check_feasible(G, [1.0, 0.5, 0.0], chi, tol=1e-3)
    assert not ok and resid == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 25), st.integers(0, 10_000))
def test_weak_duality_random(n, seed):
    G = random_connected_graph(n, 2 * n, seed=seed)
    chi = random_demand(n, seed)
    rng = np.random.default_rng(seed)
    opt = dense_oracle(G, chi).energy
    v = rng.standard_normal(n)
    assert dual_energy(G, v, chi) <= opt + 1e-9 * (1 + abs(opt))
