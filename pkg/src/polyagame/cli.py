"""Command-line front end.

Commands: validate, simulate, solve, experiment, figure4. Exit codes:
0 success, 1 usage error (bad flags), 2 validation error (bad inputs),
3 runtime error. All numeric output uses 12 significant digits so
repeated runs are byte-comparable. POLYA_SEED supplies the seed when
--seed is absent; POLYA_BACKEND (numba|numpy|auto) picks the kernel
implementation.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import backend, experiments
from .experiments import (CASE_NAMES, ExperimentConfig, run_case, run_figure4,
                          write_curves_csv, write_gnuplot_script)
from .exposure import expected_exposure_mc
from .graphs import NetworkError, builtin_network, load_network_document
from .saddle import SolverOptions, solve_equilibrium, write_trace_csv
from .urns import PolicyPair, UrnState, simulate_trajectory

_FMT = "{:.12g}"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's exit 2
        raise _UsageError(message)


def _add_network_flags(parser, required=True):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--network", metavar="PATH",
                       help="network document (JSON) to load")
    group.add_argument("--builtin", choices=("line", "star", "circle"),
                       help="built-in network family")
    parser.add_argument("--n", type=int, metavar="K",
                        help="node count for --builtin")


def _add_solver_flags(parser):
    parser.add_argument("--tol", type=float, metavar="EPS",
                        help="certified gap tolerance")
    parser.add_argument("--max-iters", type=int, metavar="K",
                        help="outer iteration budget")


def _add_budget_flags(parser):
    parser.add_argument("--budget", type=float, metavar="B",
                        help="budget for both players (default 10N)")
    parser.add_argument("--budget-red", type=float, metavar="R",
                        help="infection budget (overrides --budget)")
    parser.add_argument("--budget-black", type=float, metavar="B",
                        help="curing budget (overrides --budget)")


def build_parser() -> _Parser:
    parser = _Parser(prog="polyagame",
                     description="Network contagion urn simulator and exposure-game solver")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="check a network document")
    _add_network_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="simulate trajectories and write the draw CSV")
    _add_network_flags(p)
    _add_budget_flags(p)
    _add_solver_flags(p)
    p.add_argument("--horizon", type=int, default=50, metavar="T")
    p.add_argument("--trials", type=int, default=1, metavar="M")
    p.add_argument("--seed", type=int, metavar="S")
    p.add_argument("--case", type=int, choices=(1, 2, 3), default=1,
                   help="1 equilibrium both, 2 uniform infection, 3 uniform curing")
    p.add_argument("--policy-mode", choices=("per-trial", "frozen"), default="per-trial")
    p.add_argument("--out", metavar="DIR", help="write trajectory.csv here (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="solve the one-step exposure game")
    _add_network_flags(p)
    _add_budget_flags(p)
    _add_solver_flags(p)
    p.add_argument("--seed", type=int, metavar="S",
                   help="seed for the --estimator mc cross-check")
    p.add_argument("--estimator", choices=("exact", "mc"), default="exact",
                   help="mc additionally cross-checks the value by Monte Carlo")
    p.add_argument("--samples", type=int, default=100_000, metavar="S",
                   help="sample count for --estimator mc")
    p.add_argument("--out", metavar="DIR", help="write the solver trace.csv here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run one policy case over many trials")
    _add_network_flags(p)
    _add_budget_flags(p)
    _add_solver_flags(p)
    p.add_argument("--case", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--horizon", type=int, default=50, metavar="T")
    p.add_argument("--trials", type=int, default=1000, metavar="M")
    p.add_argument("--seed", type=int, metavar="S")
    p.add_argument("--policy-mode", choices=("per-trial", "frozen"), default="per-trial")
    p.add_argument("--threads", type=int, default=1, metavar="K")
    p.add_argument("--out", metavar="DIR", help="write curve.csv here (default stdout)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("figure4", help="three networks x three cases comparison")
    _add_solver_flags(p)
    p.add_argument("--horizon", type=int, default=50, metavar="T")
    p.add_argument("--trials", type=int, default=1000, metavar="M")
    p.add_argument("--seed", type=int, metavar="S")
    p.add_argument("--policy-mode", choices=("per-trial", "frozen"), default="per-trial")
    p.add_argument("--threads", type=int, default=1, metavar="K")
    p.add_argument("--out", metavar="DIR", default=".",
                   help="directory for figure4.csv and figure4.gp")
    p.set_defaults(func=cmd_figure4)

    return parser


def _resolve_seed(args) -> int:
    seed = getattr(args, "seed", None)
    if seed is not None:
        return seed
    env = os.environ.get("POLYA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"POLYA_SEED must be an integer, got {env!r}") from None
    return 0


def _load_network(args):
    """Returns (net, initial_red, initial_black, label)."""
    if args.network is not None:
        path = Path(args.network)
        try:
            text = path.read_text()
        except OSError as exc:
            raise NetworkError(f"--network {path}: {exc}") from None
        try:
            net, red, black = load_network_document(text)
        except NetworkError as exc:
            raise NetworkError(f"--network {path}: {exc}") from None
        return net, red, black, path.stem
    if args.n is None:
        raise _UsageError("--builtin requires --n")
    net = builtin_network(args.builtin, args.n)
    n = net.node_count
    return net, np.full(n, 10.0), np.full(n, 10.0), f"{args.builtin}{args.n}"


def _budgets(args, n: int):
    both = args.budget if args.budget is not None else 10.0 * n
    b_red = args.budget_red if args.budget_red is not None else both
    b_black = args.budget_black if args.budget_black is not None else both
    if b_red < 0.0 or b_black < 0.0:
        raise ValueError("budgets must be nonnegative")
    return b_black, b_red


def _solver_options(args, default_tol, default_iters) -> SolverOptions:
    return SolverOptions(
        max_iters=args.max_iters if args.max_iters is not None else default_iters,
        tol=args.tol if args.tol is not None else default_tol)


def _out_file(out_dir: str, name: str):
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return (path / name).open("w", newline="")


def cmd_validate(args) -> int:
    net, _, _, _ = _load_network(args)
    print(f"{net.node_count} nodes, {net.edge_count} edges, connected")
    return 0


def cmd_simulate(args) -> int:
    net, red, black, _ = _load_network(args)
    n = net.node_count
    b_black, b_red = _budgets(args, n)
    seed = _resolve_seed(args)
    opts = _solver_options(args, 1e-5, 512)
    if args.horizon < 1:
        raise ValueError("--horizon must be at least 1")
    if args.trials < 1:
        raise ValueError("--trials must be at least 1")
    uniform_x = np.full(n, b_black / n)
    uniform_y = np.full(n, b_red / n)
    frozen = None
    if args.policy_mode == "frozen":
        config = ExperimentConfig(
            network=net, initial_red=red, initial_black=black,
            budget_red=b_red, budget_black=b_black, horizon=args.horizon,
            trials=args.trials, seed=seed, case=CASE_NAMES[args.case], solver=opts)
        state0 = UrnState.initial(net, red, black)
        eq0 = solve_equilibrium(state0, b_black, b_red, opts)
        frozen = experiments._frozen_policies(config, args.case, eq0)

    def make_provider():
        box = {"warm": None, "step": 0}

        def provider(state):
            if frozen is not None:
                x_eq, y_eq = frozen[box["step"]]
            else:
                eq = solve_equilibrium(state, b_black, b_red, opts, box["warm"])
                box["warm"] = eq.warm
                x_eq, y_eq = eq.x_star, eq.y_star
            box["step"] += 1
            x = uniform_x if args.case == 3 else x_eq
            y = uniform_y if args.case == 2 else y_eq
            return PolicyPair(x, y, b_black, b_red)

        return provider

    fh = _out_file(args.out, "trajectory.csv") if args.out else sys.stdout
    try:
        for trial in range(args.trials):
            init = UrnState.initial(net, red, black)
            traj = simulate_trajectory(net, init, make_provider(), args.horizon,
                                       seed, trial=trial)
            traj.write_csv(fh, header=(trial == 0))
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _format_vector(v) -> str:
    return " ".join(_FMT.format(val) for val in v)


def cmd_solve(args) -> int:
    net, red, black, _ = _load_network(args)
    b_black, b_red = _budgets(args, net.node_count)
    opts = _solver_options(args, 1e-6, 10_000)
    state = UrnState.initial(net, red, black)
    eq = solve_equilibrium(state, b_black, b_red, opts,
                           collect_trace=args.out is not None)
    print(f"backend {backend.active()}")
    print(f"value {_FMT.format(eq.value)}")
    print(f"gap {_FMT.format(eq.gap)}")
    print(f"iterations {eq.iterations}")
    print(f"converged {'yes' if eq.converged else 'no'}")
    print(f"x_star {_format_vector(eq.x_star)}")
    print(f"y_star {_format_vector(eq.y_star)}")
    if args.estimator == "mc":
        if args.samples < 1:
            raise ValueError("--samples must be at least 1")
        est, stderr = expected_exposure_mc(state, eq.x_star, eq.y_star,
                                           args.samples, _resolve_seed(args))
        print(f"value_mc {_FMT.format(est)}")
        print(f"value_mc_stderr {_FMT.format(stderr)}")
    if args.out is not None:
        with _out_file(args.out, "trace.csv") as fh:
            write_trace_csv(eq.trace, fh)
    return 0


def cmd_experiment(args) -> int:
    net, red, black, label = _load_network(args)
    b_black, b_red = _budgets(args, net.node_count)
    config = ExperimentConfig(
        network=net, name=label, initial_red=red, initial_black=black,
        budget_red=b_red, budget_black=b_black, horizon=args.horizon,
        trials=args.trials, seed=_resolve_seed(args), case=CASE_NAMES[args.case],
        solver=_solver_options(args, 1e-5, 512),
        policy_mode=args.policy_mode, workers=args.threads)
    curve = run_case(config)
    fh = _out_file(args.out, "curve.csv") if args.out else sys.stdout
    try:
        write_curves_csv({(label, args.case): curve}, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"window_mean {_FMT.format(curve.window_mean)}", file=sys.stderr)
    print(f"window_stderr {_FMT.format(curve.window_stderr)}", file=sys.stderr)
    return 0


def cmd_figure4(args) -> int:
    solver = _solver_options(args, 1e-5, 512)
    curves = run_figure4(trials=args.trials, horizon=args.horizon,
                         seed=_resolve_seed(args), workers=args.threads,
                         policy_mode=args.policy_mode, solver=solver)
    with _out_file(args.out, "figure4.csv") as fh:
        write_curves_csv(curves, fh)
    with _out_file(args.out, "figure4.gp") as fh:
        write_gnuplot_script(fh)
    for (name, case), curve in curves.items():
        print(f"{name} case{case} window_mean {_FMT.format(curve.window_mean)} "
              f"stderr {_FMT.format(curve.window_stderr)}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (NetworkError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
