import numpy as np
import pytest

from sddflow.errors import TooLarge
from sddflow.generators import random_connected_graph
from sddflow.oracle import build_projection_matrices, cycle_vectors, dense_oracle, operator_check
from sddflow.graph import divergence
from sddflow.tree import build_tree

from conftest import path_graph


def test_k3_oracle(k3):
    G, _, chi = k3
    o = dense_oracle(G, chi)
    assert o.energy == pytest.approx(2 / 3)
    assert o.dual_energy == pytest.approx(2 / 3)
    assert np.allclose(o.voltages - o.voltages[0], [0, -1 / 3, -2 / 3])
    assert np.allclose(o.flow, [1 / 3, 1 / 3, 2 / 3])
    assert o.condition == pytest.approx(1.0)


def test_c4_oracle(c4):
    G, _ = c4
    o = dense_oracle(G, np.array([1.0, 0, -1, 0]))
    assert o.energy == pytest.approx(1.0)
    assert np.allclose(np.abs(o.flow), 0.5)


def test_zero_demand(c4):
    o = dense_oracle(c4[0], np.zeros(4))
    assert o.energy == 0 and np.all(o.voltages == 0)


def test_too_large():
    with pytest.raises(TooLarge):
        dense_oracle(path_graph(10), np.zeros(10), cap=5)


def test_cycle_vectors_are_circulations():
    G = random_connected_graph(20, 45, seed=1)
    T = build_tree(G)
    C = cycle_vectors(G, T)
    assert C.shape == (G.m - G.n + 1, G.m)
    for c in C:
        assert np.allclose(divergence(G, c), 0)


def test_projection_properties():
    G = random_connected_graph(12, 25, seed=5, rmin=1, rmax=10)
    T = build_tree(G)
    PiG, proj = build_projection_matrices(G, T)
    assert np.trace(PiG) == pytest.approx(G.n - 1)
    assert np.allclose(PiG @ PiG, PiG, atol=1e-10)
    for P in proj.values():
        assert np.allclose(PiG @ P @ PiG, PiG, atol=1e-10)
        assert np.trace(P) == pytest.approx(G.m - 1)


def test_operator_check_small():
    G = random_connected_graph(10, 18, seed=0, rmin=1, rmax=5)
    frac, errs, K = operator_check(G, build_tree(G), trials=20)
    assert K > 0 and len(errs) == 20 and frac >= 0.7
