"""Command line interface.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from . import io as sio
from .errors import SddFlowError
from .generators import random_demand
from .oracle import DEFAULT_CAP, dense_oracle, l_norm, operator_check
from .report import render, solve_fields
from .sdd import solve_sdd, validate_sdd
from .solver import SolverOptions, solve
from .tree import build_tree, compute_stretch

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("must be finite and positive")
    return v


def _tree_spec(s):
    if s in ("lowstretch", "mst") or s.startswith("file:"):
        return s
    raise argparse.ArgumentTypeError("expected lowstretch, mst or file:<path>")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=_positive_float, default=0.1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--solver", choices=("simple", "example", "full"), default="simple")
    common.add_argument("--tree", type=_tree_spec, default="lowstretch")
    common.add_argument("--report", choices=("text", "structured"), default="text")
    common.add_argument("--verify", action="store_true", help="compare against the dense oracle")
    common.add_argument("--max-iter", type=int, default=None)
    common.add_argument("--oracle-cap", type=int, default=DEFAULT_CAP)
    common.add_argument("--out", default=None, help="write the result vector (or tree) here")

    p = _Parser(prog="sddflow", description="Electrical flows and SDD systems by randomized cycle updates.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_, second in (
        ("flow", "electrical flow for a demand vector", "demand"),
        ("solve-lap", "voltages solving L v = chi", "demand"),
        ("solve-sdd", "solve A x = b for an SDD matrix", "rhs"),
    ):
        sp_ = sub.add_parser(name, parents=[common], help=help_)
        sp_.add_argument("input")
        sp_.add_argument(second)
    t = sub.add_parser("tree-stats", parents=[common], help="stretch and tree condition number")
    t.add_argument("input")
    v = sub.add_parser("verify", parents=[common], help="multi-seed checks against the dense oracle")
    v.add_argument("input")
    v.add_argument("demand", nargs="?", default=None)
    v.add_argument("--trials", type=int, default=30)
    v.add_argument("--operator-trials", type=int, default=100)
    return p


def _tree(G, args):
    if args.tree.startswith("file:"):
        return sio.parse_tree(args.tree[5:], G)
    strategy = "low_stretch" if args.tree == "lowstretch" else "min_resistance"
    return build_tree(G, strategy, seed=args.seed)


def _options(args, tree="low_stretch"):
    return SolverOptions(eps=args.eps, seed=args.seed, variant=args.solver, tree=tree, max_iter=args.max_iter)


def _write(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_graph_solve(args):
    G = sio.parse_graph(args.input)
    chi = sio.parse_vector(args.demand, G.n, demand=True)
    T = _tree(G, args)
    rep = solve(G, chi, _options(args), T=T)
    fields = [("command", args.command), ("n", G.n), ("m", G.m), ("eps", args.eps), ("tree", args.tree)]
    fields += solve_fields(rep)
    ok = True
    if args.verify:
        o = dense_oracle(G, chi, cap=args.oracle_cap)
        ratio = rep.energy / o.energy if o.energy > 0 else (1.0 if rep.energy == 0 else math.inf)
        ref = l_norm(G, o.voltages)
        verr = l_norm(G, rep.voltages - o.voltages) / ref if ref > 0 else l_norm(G, rep.voltages)
        e_ok = rep.energy <= (1 + args.eps) * o.energy + 1e-12 * max(1.0, o.energy)
        v_ok = verr <= math.sqrt(args.eps) + 1e-12
        ok = e_ok and v_ok
        fields[-1:-1] = [
            ("oracle_energy", float(o.energy)),
            ("energy_ratio", float(ratio)),
            ("voltage_error_rel", float(verr)),
            ("verify", "pass" if ok else "fail"),
        ]
    vec = rep.flow if args.command == "flow" else rep.voltages
    _write(args.out, sio.emit_vector(vec))
    return fields, ok


def _cmd_sdd(args):
    A = validate_sdd(sio.parse_matrix(args.input))
    n = A.shape[0]
    b = sio.parse_vector(args.rhs, n)
    if args.tree.startswith("file:"):
        raise SddFlowError("--tree file: is not supported for solve-sdd")
    tree = "low_stretch" if args.tree == "lowstretch" else "min_resistance"
    t0 = time.perf_counter()
    sol = solve_sdd(A, b, _options(args, tree))
    x = sol.x
    resid = float(np.max(np.abs(A @ x - b), initial=0.0))
    fields = [
        ("command", args.command),
        ("n", n),
        ("eps", args.eps),
        ("tree", args.tree),
        ("solver", args.solver),
        ("seed", args.seed),
        ("components", len(sol.reports)),
        ("iterations", int(sum(r.iterations for r in sol.reports))),
        ("residual_inf", resid),
    ]
    ok = True
    if args.verify:
        if n > args.oracle_cap:
            raise SddFlowError(f"dense check limited to n <= {args.oracle_cap}")
        Ad = A.toarray()
        xs = np.linalg.lstsq(Ad, b, rcond=None)[0]
        d = x - xs
        ref = math.sqrt(max(0.0, float(xs @ Ad @ xs)))
        err = math.sqrt(max(0.0, float(d @ Ad @ d)))
        rel = err / ref if ref > 0 else err
        ok = rel <= math.sqrt(args.eps) + 1e-12
        fields += [("a_norm_error_rel", rel), ("verify", "pass" if ok else "fail")]
    fields.append(("wall_time", time.perf_counter() - t0))
    _write(args.out, sio.emit_vector(x))
    return fields, ok


def _cmd_tree_stats(args):
    G = sio.parse_graph(args.input)
    t0 = time.perf_counter()
    T = _tree(G, args)
    s = compute_stretch(G, T)
    fields = [
        ("command", args.command),
        ("n", G.n),
        ("m", G.m),
        ("tree", args.tree),
        ("root", T.root),
        ("off_tree", len(s.off_tree)),
        ("st", float(s.total_stretch)),
        ("tau", float(s.tau)),
        ("max_stretch", float(s.stretch.max()) if G.m else 0.0),
        ("wall_time", time.perf_counter() - t0),
    ]
    _write(args.out, sio.emit_tree(T))
    return fields, True


def _cmd_verify(args):
    G = sio.parse_graph(args.input)
    t0 = time.perf_counter()
    T = _tree(G, args)
    ratios, verrs = [], []
    for k in range(args.trials):
        seed = args.seed + k
        chi = sio.parse_vector(args.demand, G.n, demand=True) if args.demand else random_demand(G.n, seed)
        o = dense_oracle(G, chi, cap=args.oracle_cap)
        rep = solve(G, chi, SolverOptions(eps=args.eps, seed=seed, variant=args.solver, max_iter=args.max_iter), T=T)
        ratios.append(rep.energy / o.energy if o.energy > 0 else 1.0)
        ref = l_norm(G, o.voltages)
        verrs.append(l_norm(G, rep.voltages - o.voltages) / ref if ref > 0 else 0.0)
    ratios, verrs = np.array(ratios), np.array(verrs)
    bound_e = 1 + args.eps + 1e-12
    bound_v = math.sqrt(args.eps) + 1e-12
    fail_rate = float(np.mean((ratios > bound_e) | (verrs > bound_v)))
    med_e, med_v = float(np.median(ratios)), float(np.median(verrs))
    ok = med_e <= bound_e and med_v <= bound_v and fail_rate <= 0.3
    fields = [
        ("command", args.command),
        ("n", G.n),
        ("m", G.m),
        ("eps", args.eps),
        ("tree", args.tree),
        ("solver", args.solver),
        ("seed", args.seed),
        ("trials", args.trials),
        ("median_energy_ratio", med_e),
        ("median_voltage_error_rel", med_v),
        ("failure_rate", fail_rate),
        ("solver_check", "pass" if ok else "fail"),
    ]
    if G.n <= 30 and len(T.off_tree) and args.operator_trials > 0:
        frac, _, K = operator_check(G, T, eps=0.1, p=0.25, trials=args.operator_trials, seed=args.seed)
        op_ok = frac >= 0.7
        ok = ok and op_ok
        fields += [("operator_iterations", K), ("operator_pass_fraction", frac), ("operator_check", "pass" if op_ok else "fail")]
    else:
        fields.append(("operator_check", "skipped"))
    fields += [("verify", "pass" if ok else "fail"), ("wall_time", time.perf_counter() - t0)]
    return fields, ok


COMMANDS = {
    "flow": _cmd_graph_solve,
    "solve-lap": _cmd_graph_solve,
    "solve-sdd": _cmd_sdd,
    "tree-stats": _cmd_tree_stats,
    "verify": _cmd_verify,
}


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        fields, ok = COMMANDS[args.command](args)
    except (SddFlowError, ValueError, OSError) as exc:
        print(f"sddflow: error: {exc}", file=stderr)
        return EXIT_INPUT
    stdout.write(render(fields, args.report))
    return EXIT_OK if ok else EXIT_VERIFY


def main() -> None:
    sys.exit(run_cli())
