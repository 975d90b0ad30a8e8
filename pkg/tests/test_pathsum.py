import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sddflow.errors import TooSmall
from sddflow.generators import random_tree
from sddflow.graph import build_graph
from sddflow.pathsum import (
    FastPathSum,
    NaivePathSum,
    PathSumTree,
    compute_all_cycle_resistances,
    ds_init,
    ds_query,
    ds_update,
    flatten,
    materialize_tree_flows,
    max_memberships,
    tree_decompose,
)
from sddflow.solver import SolverState, initial_tree_flow
from sddflow.tree import build_tree

from conftest import path_graph, star_graph


def _tree(G, root=0):
    return build_tree(G, "given", edges=range(G.m), root=root)


def test_decompose_path():
    T = _tree(path_graph(3))
    d, t0, subs = tree_decompose(T, [0, 1, 2], 0)
    assert d == 1
    assert t0.tolist() == [0, 1]
    assert [s.tolist() for s in subs] == [[1, 2]]


def test_decompose_two_vertices():
    T = _tree(path_graph(2))
    assert tree_decompose(T, [0, 1], 0) == (1, None, [])


def test_decompose_star_center():
    n = 9
    T = _tree(star_graph(n))
    d, t0, subs = tree_decompose(T, range(n), 0)
    assert d == 0 and t0 is None
    assert len(subs) == n - 1
    assert all(len(s) <= n / 2 + 1 for s in subs)


def test_decompose_too_small():
    T = _tree(path_graph(2))
    with pytest.raises(TooSmall):
        tree_decompose(T, [0], 0)


def test_init_heights_on_path():
    D = ds_init(_tree(path_graph(3)))
    top = 0
    assert D.node_sep[top] == 1
    h = {a: ht for a in range(3) for node, _, ht in D.memberships(a) if node == top}
    assert h == {1: 1.0, 2: 1.0}  # the root is not a member; its height would be 0
    assert np.all(D.ext == 0) and np.all(D.drop == 0)


def test_single_edge_base_case():
    G = build_graph(2, [(0, 1, 2.5)])
    D = ds_init(_tree(G))
    assert D.num_nodes == 1 and D.node_sep[0] == 1
    assert D.memberships(1) == [(0, 2, 2.5)]
    ds_update(D, 1, 1.0)
    assert ds_query(D, 1) == -2.5


def test_query_update_examples():
    T = _tree(path_graph(3))
    D = ds_init(T)
    ds_update(D, 2, -1.0)
    assert ds_query(D, 1) == 1.0 and ds_query(D, 2) == 2.0
    D = ds_init(T)
    ds_update(D, 2, 1.0)
    ds_update(D, 1, 1.0)
    assert ds_query(D, 2) == -3.0
    assert ds_query(D, 0) == 0.0


def test_update_at_root_is_invisible():
    G = random_tree(30, seed=1)
    D = ds_init(_tree(G))
    ds_update(D, 0, 5.0)
    assert all(ds_query(D, a) == 0.0 for a in range(30))


def test_update_then_undo():
    G = random_tree(40, seed=2)
    D = ds_init(_tree(G))
    rng = np.random.default_rng(0)
    for _ in range(20):
        ds_update(D, int(rng.integers(40)), rng.standard_normal())
    before = D.voltages()
    ds_update(D, 17, 0.37)
    ds_update(D, 17, -0.37)
    assert np.allclose(D.voltages(), before, atol=1e-12, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 300), st.integers(0, 10_000))
def test_membership_bound_and_balance(n, seed):
    G = random_tree(n, seed=seed)
    D = PathSumTree(_tree(G, root=seed % n))
    counts = np.diff(D.mem_ptr)
    assert counts.max() <= max_memberships(n)
    assert counts[D.root] == 0
    for i in range(D.num_nodes):
        for c in D.children[i]:
            assert D.node_size[c] <= D.node_size[i] / 2 + 1


def test_flattened_matches_recursive_on_many_trees():
    rng = np.random.default_rng(7)
    for t in range(200):
        n = int(rng.integers(2, 257))
        G = random_tree(n, seed=t)
        D = PathSumTree(_tree(G, root=int(rng.integers(n))))
        F = flatten(D)
        bound = 2 * (math.ceil(math.log2(n)) + 1)
        assert max(F.support(a)[0] for a in range(n)) <= bound
        assert max(F.support(a)[1] for a in range(n)) <= bound
        assert F.support(D.root) == (0, 0)
        for _ in range(5):
            a = int(rng.integers(n))
            alpha = float(rng.standard_normal())
            D.update(a, alpha)
            F.update(a, alpha)
        q = np.array([F.query(a) for a in range(n)])
        assert np.allclose(q, D.voltages(), atol=1e-12, rtol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120), st.integers(0, 10_000))
def test_all_forms_agree(n, seed):
    G = random_tree(n, seed=seed, rmin=0.1, rmax=10)
    T = _tree(G, root=seed % n)
    D = PathSumTree(T)
    forms = [D, FastPathSum(PathSumTree(T)), flatten(PathSumTree(T)), NaivePathSum(T, G.r)]
    rng = np.random.default_rng(seed)
    for _ in range(100):
        a = int(rng.integers(n))
        alpha = float(rng.standard_normal())
        for f in forms:
            f.update(a, alpha)
        b = int(rng.integers(n))
        vals = [f.query(b) for f in forms]
        assert np.allclose(vals, vals[-1], atol=1e-12, rtol=0)


def test_linearity_of_queries():
    G = random_tree(60, seed=3)
    T = _tree(G)
    rng = np.random.default_rng(1)
    ups1 = [(int(rng.integers(60)), float(rng.standard_normal())) for _ in range(30)]
    ups2 = [(int(rng.integers(60)), float(rng.standard_normal())) for _ in range(30)]

    def run(ups):
        D = PathSumTree(T)
        for a, x in ups:
            D.update(a, x)
        return D.voltages()

    combo = [(a, 2 * x) for a, x in ups1] + [(a, -3 * x) for a, x in ups2]
    assert np.allclose(run(combo), 2 * run(ups1) - 3 * run(ups2), atol=1e-10)


def test_cycle_resistances_fixtures(k3, c4):
    G, T, _ = k3
    assert compute_all_cycle_resistances(G, T).tolist() == [3.0]
    G4, T4 = c4
    assert compute_all_cycle_resistances(G4, T4).tolist() == [4.0]
    # the off-tree edge in series with its tree path
    G5 = build_graph(3, [(0, 1, 2.0), (1, 2, 1.0), (0, 2, 0.5)])
    T5 = build_tree(G5, "given", edges=[(0, 1), (0, 2)])
    assert compute_all_cycle_resistances(G5, T5).tolist() == [3.5]


def test_materialize_tree_flows(k3):
    G, T, chi = k3
    S = SolverState(G, T, chi)
    f = materialize_tree_flows(S.ds, G, T)
    assert np.allclose(f, initial_tree_flow(G, T, chi), atol=1e-15)
    S.cycle_update(G.edge_id(0, 2))
    f = materialize_tree_flows(S.ds, G, T)
    assert np.allclose(f, [1 / 3, 1 / 3, 0.0])
    zero = FastPathSum(PathSumTree(T))
    assert np.all(materialize_tree_flows(zero, G, T) == 0)
