"""Randomized cycle-update solvers for electrical flows.

A solver state keeps the flow in two pieces: a plain array for off-tree edges
and a :class:`~sddflow.pathsum.PathSumTree` for tree edges. Each iteration
samples an off-tree edge with probability proportional to ``R_e / r_e`` and
cancels the potential around its tree cycle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (
    BadScale,
    DemandNotBalanced,
    DimensionMismatch,
    NoOffTreeEdges,
    NotOffTree,
)
from .graph import (
    WeightedGraph,
    check_feasible,
    divergence,
    dual_energy,
    energy,
)
from .pathsum import FastPathSum, PathSumTree, materialize_tree_flows
from .sampling import AliasTable
from .tree import SpanningTree, StretchSummary, build_tree, compute_stretch, tree_from_edges

VARIANTS = ("simple", "example", "full")
_BATCH = 1 << 13
_EFFECTIVE_TOL = 1e-12


@dataclass
class SolverOptions:
    eps: float = 0.1
    seed: int = 0
    variant: str = "simple"
    tree: str = "low_stretch"
    tree_edges: object = None  # for tree="given"
    max_iter: int | None = None  # cap on total cycle updates across all stages
    tol: float | None = None  # feasibility tolerance, defaults to 1e-9 (1 + |chi|_inf)
    early_exit_gap: float | None = None  # stop once gap <= this * energy; off by default
    root: int = 0

    def __post_init__(self):
        if not (isinstance(self.eps, (int, float)) and math.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be finite and positive, got {self.eps!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown solver variant {self.variant!r}")
        if self.max_iter is not None and self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")


@dataclass
class SolveReport:
    flow: np.ndarray
    voltages: np.ndarray
    energy: float
    dual_energy: float
    gap: float
    iterations: int
    effective_updates: int
    seed: int
    st: float
    tau: float
    residual: float
    wall_time: float
    solver: str = "simple"
    stages: list = field(default_factory=list)  # (iterations, tau) per stage


def _balanced(chi, tol=None):
    chi = np.asarray(chi, dtype=float)
    if tol is None:
        tol = 1e-9 * (1.0 + (float(np.max(np.abs(chi))) if chi.size else 0.0)) * max(1.0, math.sqrt(chi.size))
    if abs(float(chi.sum())) > tol:
        raise DemandNotBalanced(f"demands sum to {chi.sum():.3e}, expected 0")
    return chi


def initial_tree_flow(G: WeightedGraph, T: SpanningTree, chi) -> np.ndarray:
    """The unique flow supported on ``T`` that meets ``chi``.

    The parent edge of ``v`` carries the total demand of ``v``'s subtree out of it.
    """
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (G.n,):
        raise DimensionMismatch(f"demand vector has shape {chi.shape}, expected ({G.n},)")
    _balanced(chi)
    sub = chi.copy()
    parent = T.parent
    for v in T.order[:0:-1].tolist():
        sub[parent[v]] += sub[v]
    f = np.zeros(G.m)
    nonroot = T.order[1:]
    # parent_sign +1: edge points parent -> v, against the outgoing subtree demand
    f[T.parent_edge[nonroot]] = -T.parent_sign[nonroot] * sub[nonroot]
    return f


class SolverState:
    """Mutable flow state on one (graph, tree) pair.

    ``chi`` is routed through the tree on top of the off-tree flows ``foff``
    (given in ``T.off_tree`` order, zero by default).
    """

    def __init__(self, G: WeightedGraph, T: SpanningTree, chi, rng=None, foff=None, summary=None):
        self.G = G
        self.T = T
        self.chi = _balanced(chi)
        self.summary: StretchSummary = summary if summary is not None else compute_stretch(G, T)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        off = T.off_tree
        self.off = off
        self.slot = {int(e): k for k, e in enumerate(off.tolist())}
        # one 32-byte record per off-tree edge, layout in _kernels
        self.rec = K.aligned_rows(len(off))
        self.spans = self.rec.view(np.int64)
        self.rec[:, 0] = G.r[off]
        self.rec[:, 1] = self.summary.cycle_resistance
        self.rec[:, 2] = 0.0 if foff is None else np.asarray(foff, dtype=float)
        self.D = PathSumTree(T)
        self.ds = FastPathSum(self.D)
        self.spans[:, 3] = K.pack_spans(self.D.mem_ptr, G.tail[off], G.head[off])
        full_off = np.zeros(G.m)
        full_off[off] = self.foff
        self.ds.load_demands(self.chi - divergence(G, full_off))
        self.alias = AliasTable(self.summary.p) if len(off) else None
        self.iterations = 0
        self.effective = 0

    @property
    def foff(self) -> np.ndarray:
        """Off-tree flows in ``T.off_tree`` order (a view)."""
        return self.rec[:, 2]

    @property
    def tau(self) -> float:
        return self.summary.tau

    def _slot(self, e: int) -> int:
        k = self.slot.get(int(e))
        if k is None:
            raise NotOffTree(f"edge {e} is not an off-tree edge")
        return k

    def voltages(self) -> np.ndarray:
        return self.ds.voltages()

    def flow(self) -> np.ndarray:
        f = materialize_tree_flows(self.ds, self.G, self.T)
        f[self.off] = self.foff
        return f

    def cycle_potential(self, e: int) -> float:
        k = self._slot(e)
        e = int(self.off[k])
        a, b = int(self.G.tail[e]), int(self.G.head[e])
        return float(self.rec[k, 2] * self.rec[k, 0] - (self.ds.query(a) - self.ds.query(b)))

    def cycle_update(self, e: int) -> float:
        """Cancel the cycle potential of off-tree edge ``e``; returns the potential removed."""
        k = self._slot(e)
        d = self.ds
        delta = K.cycle_update_one(d.mem, d.x, self.rec, self.spans, k)
        self.iterations += 1
        return float(delta)

    def sample_edge(self) -> int:
        if self.alias is None:
            raise NoOffTreeEdges("the tree spans every edge")
        return int(self.off[self.alias.sample(self.rng.random())])

    def run(self, count: int) -> int:
        """Apply ``count`` sampled cycle updates; returns how many were effective."""
        if count <= 0:
            return 0
        if self.alias is None:
            raise NoOffTreeEdges("the tree spans every edge")
        d = self.ds
        done = 0
        eff = 0
        while done < count:
            u = self.rng.random(min(_BATCH, count - done))
            picks = K.alias_sample(self.alias.prob, self.alias.alias, u)
            eff += K.run_cycle_updates(d.mem, d.x, self.rec, self.spans, picks, _EFFECTIVE_TOL)
            done += len(u)
        self.iterations += count
        self.effective += eff
        return eff

    def run_until(self, count: int, gap_ratio: float, check_every: int | None = None) -> int:
        """Like :meth:`run` but stops early once ``gap <= gap_ratio * energy``."""
        step = check_every or max(1, int(math.ceil(self.tau)))
        done = 0
        while done < count:
            self.run(min(step, count - done))
            done += min(step, count - done)
            f, v = self.flow(), self.voltages()
            e = energy(self.G, f)
            if e - dual_energy(self.G, v, self.chi) <= gap_ratio * e:
                break
        return done


def tree_induced_voltages(state: SolverState) -> np.ndarray:
    return state.voltages()


def cycle_potential(state: SolverState, e: int) -> float:
    return state.cycle_potential(e)


def cycle_update(state: SolverState, e: int) -> float:
    return state.cycle_update(e)


def sample_edge(state: SolverState) -> int:
    return state.sample_edge()


def scale_tree(G: WeightedGraph, T: SpanningTree, kappa: float) -> WeightedGraph:
    """Copy of ``G`` with every tree-edge resistance divided by ``kappa``."""
    if not (math.isfinite(kappa) and kappa >= 1):
        raise BadScale(f"scale factor must be >= 1, got {kappa}")
    r = G.r.copy()
    r[T.in_tree] /= kappa
    return G.with_resistances(r)


def _ceil_nonneg(x: float) -> int:
    return max(0, int(math.ceil(x)))


def _log1(x: float) -> float:
    return math.log(max(1.0, x))


def simple_iterations(summary: StretchSummary, eps: float) -> int:
    if len(summary.off_tree) == 0:
        return 0
    return _ceil_nonneg(summary.tau * _log1(summary.total_stretch * summary.tau / eps))


def kappa_sequence(n: int) -> list:
    """``kappa_1 = ln n``, ``kappa_i = ln kappa_{i-1}`` until one is at most 2; each clamped to >= 1."""
    ks = [max(1.0, math.log(max(n, 1)))]
    while ks[-1] > 2.0:
        ks.append(max(1.0, math.log(ks[-1])))
    return ks


class _Budget:
    def __init__(self, cap):
        self.left = cap

    def take(self, k: int) -> int:
        if self.left is None:
            return k
        k = min(k, self.left)
        self.left -= k
        return k


def _resolve_tree(G, T, options):
    if T is not None:
        return T
    strategy = options.tree
    if strategy == "given":
        return build_tree(G, "given", edges=options.tree_edges, root=options.root)
    return build_tree(G, strategy, seed=options.seed, root=options.root)


def _stage(G, T, chi, rng, foff, k, budget, options, stages):
    """Run one stage with ``k`` updates; returns the state."""
    st = SolverState(G, T, chi, rng=rng, foff=foff)
    k = budget.take(k)
    if k and len(T.off_tree):
        if options.early_exit_gap is not None:
            k = st.run_until(k, options.early_exit_gap)
        else:
            st.run(k)
    stages.append((k, st.tau))
    return st


def _report(G, T, summary, state, chi, options, t0, name, stages, effective) -> SolveReport:
    f = state.flow()
    v = state.voltages()
    e = energy(G, f)
    de = dual_energy(G, v, chi)
    _, resid = check_feasible(G, f, chi, options.tol)
    return SolveReport(
        flow=f,
        voltages=v,
        energy=e,
        dual_energy=de,
        gap=e - de,
        iterations=int(sum(k for k, _ in stages)),
        effective_updates=int(effective),
        seed=int(options.seed),
        st=float(summary.total_stretch),
        tau=float(summary.tau),
        residual=resid,
        wall_time=time.perf_counter() - t0,
        solver=name,
        stages=stages,
    )


def simple_solver(G: WeightedGraph, chi, options: SolverOptions | None = None, T: SpanningTree | None = None) -> SolveReport:
    """Route ``chi`` on the tree, then apply ``ceil(tau ln(st tau / eps))`` sampled cycle updates."""
    options = options or SolverOptions()
    t0 = time.perf_counter()
    T = _resolve_tree(G, T, options)
    rng = np.random.default_rng(options.seed)
    summary = compute_stretch(G, T)
    state = SolverState(G, T, chi, rng=rng, summary=summary)
    k = _Budget(options.max_iter).take(simple_iterations(summary, options.eps))
    if k:
        if options.early_exit_gap is not None:
            k = state.run_until(k, options.early_exit_gap)
        else:
            state.run(k)
    return _report(G, T, summary, state, state.chi, options, t0, "simple", [(k, summary.tau)], state.effective)


def example_solver(G: WeightedGraph, chi, options: SolverOptions | None = None, T: SpanningTree | None = None) -> SolveReport:
    """Warm start on the tree scaled by ``ln n`` (target eps = 1), then a randomized-length final stage."""
    options = options or SolverOptions()
    t0 = time.perf_counter()
    T = _resolve_tree(G, T, options)
    rng = np.random.default_rng(options.seed)
    summary = compute_stretch(G, T)
    chi = _balanced(chi)
    budget = _Budget(options.max_iter)
    stages = []
    effective = 0
    foff = None
    if len(T.off_tree):
        kappa = max(1.0, math.log(G.n))
        G1 = scale_tree(G, T, kappa)
        T1 = tree_from_edges(G1, T.tree_edges, T.root)
        s1 = compute_stretch(G1, T1)
        st1 = _stage(G1, T1, chi, rng, None, simple_iterations(s1, 1.0), budget, options, stages)
        effective += st1.effective
        foff = st1.foff
        k = _ceil_nonneg(summary.tau * _log1(2.0 * math.log(G.n) / options.eps))
        k += int(rng.integers(0, max(1, math.ceil(summary.tau))))
    else:
        k = 0
    final = _stage(G, T, chi, rng, foff, k, budget, options, stages)
    return _report(G, T, summary, final, chi, options, t0, "example", stages, effective + final.effective)


def full_iteration_schedule(G: WeightedGraph, T: SpanningTree, eps: float, summary=None):
    """Stage graphs and update counts; the final entry is the unscaled graph.

    Returns ``[(kappa_product, stage_graph, stage_tree, k), ...]`` where the
    last ``k`` excludes the random extra count.
    """
    summary = summary or compute_stretch(G, T)
    ks = kappa_sequence(G.n)
    tau, m = summary.tau, G.m
    out = []
    for i in range(len(ks)):
        prod = float(np.prod(ks[i:]))
        Gi = scale_tree(G, T, prod)
        Ti = tree_from_edges(Gi, T.tree_edges, T.root)
        if i == 0:
            si = compute_stretch(Gi, Ti)
            k = _ceil_nonneg((tau / prod + m) * _log1(si.total_stretch))
        else:
            k = _ceil_nonneg((tau / prod + m) * _log1(2.0 * ks[i - 1] - 1.0))
        out.append((prod, Gi, Ti, k))
    k = _ceil_nonneg((tau + m) * _log1((2.0 * ks[-1] - 1.0) / eps))
    out.append((1.0, G, T, k))
    return out


def full_solver(G: WeightedGraph, chi, options: SolverOptions | None = None, T: SpanningTree | None = None) -> SolveReport:
    """Warm-started solve through a shrinking sequence of tree scalings."""
    options = options or SolverOptions()
    t0 = time.perf_counter()
    T = _resolve_tree(G, T, options)
    rng = np.random.default_rng(options.seed)
    summary = compute_stretch(G, T)
    chi = _balanced(chi)
    budget = _Budget(options.max_iter)
    stages = []
    if not len(T.off_tree):
        final = _stage(G, T, chi, rng, None, 0, budget, options, stages)
        return _report(G, T, summary, final, chi, options, t0, "full", stages, 0)
    schedule = full_iteration_schedule(G, T, options.eps, summary)
    foff = None
    effective = 0
    for _, Gi, Ti, k in schedule[:-1]:
        st = _stage(Gi, Ti, chi, rng, foff, k, budget, options, stages)
        foff = st.foff
        effective += st.effective
    k = schedule[-1][3] + int(rng.integers(0, max(1, math.ceil(summary.tau))))
    final = _stage(G, T, chi, rng, foff, k, budget, options, stages)
    return _report(G, T, summary, final, chi, options, t0, "full", stages, effective + final.effective)


SOLVERS = {"simple": simple_solver, "example": example_solver, "full": full_solver}


def solve(G: WeightedGraph, chi, options: SolverOptions | None = None, T: SpanningTree | None = None) -> SolveReport:
    options = options or SolverOptions()
    return SOLVERS[options.variant](G, chi, options, T)
