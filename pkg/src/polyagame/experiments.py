"""Trial-averaged infection-rate experiments.

For each trial, the network process runs for a horizon of steps; at
every step the exposure-game equilibrium is recomputed on that trial's
realized history (policy_mode="per-trial", the default) or taken from a
precomputed expected-state schedule (policy_mode="frozen"). Three policy
cases share the same joint equilibrium computation:

    1 equilibrium_both   both players play the equilibrium
    2 uniform_infection  curing plays the equilibrium, infection spreads
                         its budget uniformly
    3 uniform_curing     infection plays the equilibrium, curing spreads
                         its budget uniformly

The reported curve is the average infection rate: the draw indicator
averaged over trials and nodes, step by step. Trials are independent
work units keyed by (seed, trial-index), and results are reduced in
trial order, so curves do not depend on the worker count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graphs import Network, builtin_network
from .saddle import SolverOptions, WarmStart, solve_equilibrium, solve_on_coefficients
from .urns import PolicyPair, UrnState, trial_uniforms

_FMT = "{:.12g}"

CASE_NAMES = {1: "equilibrium_both", 2: "uniform_infection", 3: "uniform_curing"}
_CASE_IDS = {name: num for num, name in CASE_NAMES.items()}

FIGURE4_NETWORKS = (("line7", "line", 7), ("star6", "star", 6), ("circle6", "circle", 6))


def _case_id(case) -> int:
    if isinstance(case, str):
        if case not in _CASE_IDS:
            raise ValueError(f"unknown case {case!r}; choose from {sorted(_CASE_IDS)}")
        return _CASE_IDS[case]
    case = int(case)
    if case not in CASE_NAMES:
        raise ValueError("case number must be 1, 2 or 3")
    return case


def _default_solver() -> SolverOptions:
    # per-step solves are warm started, so a small iteration budget with a
    # mid tolerance keeps trial loops fast without drifting off equilibrium
    return SolverOptions(max_iters=512, tol=1e-5, inner_max_iters=2000)


@dataclass
class ExperimentConfig:
    network: Network
    name: str = ""
    initial_red: float = 10.0
    initial_black: float = 10.0
    budget_red: float | None = None
    budget_black: float | None = None
    horizon: int = 50
    trials: int = 1000
    seed: int = 0
    case: str = "equilibrium_both"
    solver: SolverOptions = field(default_factory=_default_solver)
    policy_mode: str = "per-trial"
    workers: int = 1

    def __post_init__(self):
        n = self.network.node_count
        if self.budget_red is None:
            self.budget_red = 10.0 * n
        if self.budget_black is None:
            self.budget_black = 10.0 * n
        if self.budget_red < 0.0 or self.budget_black < 0.0:
            raise ValueError("budgets must be nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.policy_mode not in ("per-trial", "frozen"):
            raise ValueError("policy_mode must be 'per-trial' or 'frozen'")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.case = CASE_NAMES[_case_id(self.case)]
        self.initial_red = np.broadcast_to(
            np.asarray(self.initial_red, dtype=np.float64), (n,)).copy()
        self.initial_black = np.broadcast_to(
            np.asarray(self.initial_black, dtype=np.float64), (n,)).copy()
        if np.any(self.initial_red <= 0.0) or np.any(self.initial_black <= 0.0):
            raise ValueError("initial ball masses must be strictly positive")
        if not self.name:
            self.name = f"n{n}"


@dataclass
class InfectionCurve:
    """Empirical average infection rate per step, with trial spread.

    window_mean / window_stderr summarize the per-trial time averages
    over the second half of the horizon (steps ceil(T/2)..T); the stderr
    is taken across trials, so it accounts for within-trial correlation.
    """

    mean: np.ndarray
    stderr: np.ndarray
    trials: int
    window_mean: float
    window_stderr: float
    network: str = ""
    case: int = 0


def case_policy(state: UrnState, case, budget_black: float, budget_red: float,
                opts: SolverOptions | None = None,
                warm: WarmStart | None = None) -> PolicyPair:
    """Policy pair for one case; the solved side comes from the joint equilibrium."""
    case_id = _case_id(case)
    eq = solve_equilibrium(state, budget_black, budget_red,
                           opts or _default_solver(), warm)
    n = state.net.node_count
    x = np.full(n, budget_black / n) if case_id == 3 else eq.x_star
    y = np.full(n, budget_red / n) if case_id == 2 else eq.y_star
    return PolicyPair(x, y, budget_black, budget_red)


def _closed_sums(masses: np.ndarray, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    return np.add.reduceat(masses[indices], indptr[:-1])


def _frozen_policies(config: ExperimentConfig, case_id: int, eq0):
    """Per-step equilibrium pairs along the expected-state path."""
    net = config.network
    n = net.node_count
    indptr, indices = net.closed_csr()
    uniform_x = np.full(n, config.budget_black / n)
    uniform_y = np.full(n, config.budget_red / n)
    red = config.initial_red.copy()
    black = config.initial_black.copy()
    policies = []
    eq = eq0
    warm = eq0.warm
    for step in range(config.horizon):
        if step > 0:
            c = _closed_sums(red, indptr, indices)
            d = _closed_sums(black, indptr, indices)
            eq = solve_on_coefficients(c, d, indptr, indices,
                                       config.budget_black, config.budget_red,
                                       config.solver, warm)
            warm = eq.warm
        policies.append((eq.x_star, eq.y_star))
        x_app = uniform_x if case_id == 3 else eq.x_star
        y_app = uniform_y if case_id == 2 else eq.y_star
        s = _closed_sums(red, indptr, indices) / (
            _closed_sums(red, indptr, indices) + _closed_sums(black, indptr, indices))
        # evolve the expected state: each node gains its addition in expectation
        red = red + y_app * s
        black = black + x_app * (1.0 - s)
    return policies


def run_case(config: ExperimentConfig) -> InfectionCurve:
    """Simulate config.trials trials and average the infection indicator.

    Deterministic given config.seed, independent of config.workers.
    """
    net = config.network
    n = net.node_count
    t_hor = config.horizon
    case_id = _case_id(config.case)
    indptr, indices = net.closed_csr()
    uniform_x = np.full(n, config.budget_black / n)
    uniform_y = np.full(n, config.budget_red / n)
    state0 = UrnState.initial(net, config.initial_red, config.initial_black)
    # all trials share the deterministic initial state, so solve step 1 once
    eq0 = solve_equilibrium(state0, config.budget_black, config.budget_red, config.solver)
    frozen = None
    if config.policy_mode == "frozen":
        frozen = _frozen_policies(config, case_id, eq0)

    def worker(trial: int) -> np.ndarray:
        uniforms = trial_uniforms(config.seed, trial, t_hor, n)
        red = config.initial_red.copy()
        black = config.initial_black.copy()
        draws = np.zeros((n, t_hor), dtype=np.int8)
        warm = eq0.warm
        for step in range(t_hor):
            c = _closed_sums(red, indptr, indices)
            d = _closed_sums(black, indptr, indices)
            if frozen is not None:
                x_eq, y_eq = frozen[step]
            elif step == 0:
                x_eq, y_eq = eq0.x_star, eq0.y_star
            else:
                try:
                    eq = solve_on_coefficients(c, d, indptr, indices,
                                               config.budget_black, config.budget_red,
                                               config.solver, warm)
                except Exception as exc:
                    raise RuntimeError(
                        f"equilibrium solve failed at trial {trial}, step {step + 1}") from exc
                warm = eq.warm
                x_eq, y_eq = eq.x_star, eq.y_star
            x_app = uniform_x if case_id == 3 else x_eq
            y_app = uniform_y if case_id == 2 else y_eq
            s = c / (c + d)
            z = uniforms[step] < s
            red = red + np.where(z, y_app, 0.0)
            black = black + np.where(z, 0.0, x_app)
            draws[:, step] = z
        return draws

    if config.workers == 1:
        results = [worker(t) for t in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(worker, range(config.trials)))
    draws_all = np.stack(results)  # (trials, nodes, horizon)
    trial_means = draws_all.mean(axis=1)  # per-trial node average, (trials, horizon)
    mean = trial_means.mean(axis=0)
    if config.trials > 1:
        stderr = trial_means.std(axis=0, ddof=1) / np.sqrt(config.trials)
    else:
        stderr = np.zeros(t_hor)
    w0 = (t_hor + 1) // 2  # first step of the [ceil(T/2), T] window, 1-based
    window = trial_means[:, w0 - 1:].mean(axis=1)
    window_mean = float(window.mean())
    window_stderr = (float(window.std(ddof=1) / np.sqrt(config.trials))
                     if config.trials > 1 else 0.0)
    return InfectionCurve(mean=mean, stderr=stderr, trials=config.trials,
                          window_mean=window_mean, window_stderr=window_stderr,
                          network=config.name, case=case_id)


def run_figure4(trials: int = 1000, horizon: int = 50, seed: int = 0,
                workers: int = 1, policy_mode: str = "per-trial",
                solver: SolverOptions | None = None,
                cases=(1, 2, 3)) -> dict:
    """All (network, case) infection curves of the three-network comparison.

    Budgets are 10N per player and every node starts with 10 red and 10
    black balls. Returns {(network_name, case_id): InfectionCurve}.
    """
    curves = {}
    for name, kind, n in FIGURE4_NETWORKS:
        net = builtin_network(kind, n)
        for case in cases:
            config = ExperimentConfig(
                network=net, name=name, horizon=horizon, trials=trials,
                seed=seed, case=CASE_NAMES[_case_id(case)],
                solver=solver or _default_solver(),
                policy_mode=policy_mode, workers=workers)
            curves[(name, _case_id(case))] = run_case(config)
    return curves


def write_curves_csv(curves: dict, fh) -> None:
    """Rows `network,case,n,mean,stderr,trials`, one per (network, case, step)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["network", "case", "n", "mean", "stderr", "trials"])
    for (name, case), curve in curves.items():
        for step in range(curve.mean.size):
            writer.writerow([name, case, step + 1,
                             _FMT.format(curve.mean[step]),
                             _FMT.format(curve.stderr[step]),
                             curve.trials])


def write_gnuplot_script(fh, csv_name: str = "figure4.csv") -> None:
    """Companion gnuplot commands plotting the curve CSV, one panel per network."""
    names = [name for name, _, _ in FIGURE4_NETWORKS]
    fh.write("# companion plot script; render with: gnuplot figure4.gp\n")
    fh.write("set datafile separator ','\n")
    fh.write("set terminal pngcairo size 1500,500\n")
    fh.write("set output 'figure4.png'\n")
    fh.write("set multiplot layout 1,3\n")
    fh.write("set xlabel 'step n'\nset ylabel 'average infection rate'\n")
    fh.write("set key bottom right\n")
    for name in names:
        fh.write(f"set title '{name}'\n")
        parts = []
        for case in (1, 2, 3):
            parts.append(
                f"'{csv_name}' skip 1 "
                f"using 3:((stringcolumn(1) eq '{name}' && $2 == {case}) ? $4 : 1/0) "
                f"with lines title 'case {case}'")
        fh.write("plot " + ", \\\n     ".join(parts) + "\n")
    fh.write("unset multiplot\n")
