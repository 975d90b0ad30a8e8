"""Nearly linear time Laplacian and SDD solving by randomized tree-cycle updates."""

from .errors import *  # noqa: F401,F403
from .graph import (
    WeightedGraph,
    apply_laplacian,
    build_graph,
    check_feasible,
    divergence,
    dual_energy,
    duality_gap,
    energy,
    laplacian_matrix,
)
from .pathsum import (
    FastPathSum,
    NaivePathSum,
    PathSumTree,
    compute_all_cycle_resistances,
    ds_init,
    ds_query,
    ds_update,
    flatten,
    materialize_tree_flows,
    tree_decompose,
)
from .sdd import build_augmented_laplacian, decompose, solve_sdd, validate_sdd
from .solver import (
    SolveReport,
    SolverOptions,
    SolverState,
    cycle_potential,
    cycle_update,
    example_solver,
    full_solver,
    initial_tree_flow,
    sample_edge,
    scale_tree,
    simple_solver,
    solve,
    tree_induced_voltages,
)
from .tree import SpanningTree, StretchSummary, build_tree, compute_stretch, lca, tree_path

__version__ = "0.1.0"
