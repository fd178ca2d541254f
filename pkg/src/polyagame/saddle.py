"""Nash equilibrium of the one-step exposure game.

The curing player minimizes the expected exposure over the simplex
{x >= 0, sum x = B_b}; the infection player maximizes over
{y >= 0, sum y = B_r}. Budget equality (rather than <=) is used because
optimal policies saturate their budgets, and it removes a redundant
dimension. The payoff is convex in x and concave in y, so a saddle
point exists.

Algorithm: simultaneous projected gradient descent-ascent with uniform
iterate averaging. Convergence is declared only on a certified
restricted duality gap

    gap(x, y) = max_{y'} E(x, y') - min_{x'} E(x', y)

whose inner problems are solved by accelerated projected gradient with a
linearized-headroom bound, giving an upper bound on the true gap that is
valid no matter how well the inner solves converged. Candidates are
certified at geometrically spaced checkpoints; the pair with the
smallest certified gap wins, which makes the reported gap nonincreasing
in the iteration budget whenever one budget's checkpoint schedule is a
prefix of the other's.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .exposure import ENUMERATION_CAP, coefficients
from .urns import UrnState

_FMT = "{:.12g}"
_POLISH_ROUNDS = 2


@dataclass
class SolverOptions:
    """Knobs for solve_equilibrium and restricted_gap."""

    max_iters: int = 10_000
    tol: float = 1e-6
    step_rule: str = "diminishing"
    eta: float | None = None
    eta0: float | None = None
    averaging: bool = True
    inner_max_iters: int = 4000

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.step_rule not in ("diminishing", "fixed"):
            raise ValueError("step_rule must be 'diminishing' or 'fixed'")
        if self.step_rule == "fixed" and (self.eta is None or self.eta <= 0.0):
            raise ValueError("fixed step rule needs eta > 0")
        if self.eta0 is not None and self.eta0 <= 0.0:
            raise ValueError("eta0 must be positive when given")
        if self.inner_max_iters < 1:
            raise ValueError("inner_max_iters must be at least 1")


@dataclass
class WarmStart:
    """Iterates and inner best responses carried between related solves."""

    x: np.ndarray
    y: np.ndarray
    x_br: np.ndarray
    y_br: np.ndarray


@dataclass
class Equilibrium:
    x_star: np.ndarray
    y_star: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool
    trace: list | None = None
    warm: WarmStart | None = field(default=None, repr=False)


def project_simplex(v, budget: float) -> np.ndarray:
    """Euclidean projection of v onto {u >= 0, sum(u) = budget}."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("v must be a nonempty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("v must be finite")
    if budget < 0.0:
        raise ValueError("budget must be nonnegative")
    return backend.kernels().project_simplex(v, float(budget))


def _checkpoints(max_iters: int) -> list:
    cps = [0]
    c = 16
    while c < max_iters:
        cps.append(c)
        c *= 2
    if max_iters > 0:
        cps.append(max_iters)
    return cps


class _Engine:
    """One solve on raw coefficient arrays; shared by the public entry points."""

    def __init__(self, c, d, indptr, indices, b_black, b_red, opts):
        self.c = c
        self.d = d
        self.indptr = indptr
        self.indices = indices
        self.b_black = float(b_black)
        self.b_red = float(b_red)
        self.opts = opts
        self.kern = backend.kernels()
        self.n = c.size
        deg = np.diff(indptr).astype(np.float64)
        # gradient Lipschitz bound: second derivatives are at most
        # 2|N_i'|/(c_i+d_i)^2 per node, averaged over nodes
        lip = 2.0 / self.n * float(np.sum(deg / (c + d) ** 2))
        self.eta_inner = 1.0 / lip
        self.evals = 0

    def value(self, x, y) -> float:
        val, _, _ = self.kern.exact_eval(self.c, self.d, x, y, self.indptr, self.indices)
        self.evals += 1
        if not np.isfinite(val):
            raise RuntimeError("non-finite exposure evaluation; state is corrupted")
        return float(val)

    def grads(self, x, y):
        val, gx, gy = self.kern.exact_eval(self.c, self.d, x, y, self.indptr, self.indices)
        self.evals += 1
        if not np.isfinite(val):
            raise RuntimeError("non-finite exposure evaluation; state is corrupted")
        return float(val), gx, gy

    def certify(self, x, y, y_ws, x_ws, inner_tol):
        """Certified restricted gap at (x, y) plus fresh best responses."""
        y_br, _, max_ub, _ = self.kern.inner_max(
            self.c, self.d, self.indptr, self.indices, x, y_ws,
            self.b_red, self.eta_inner, inner_tol, self.opts.inner_max_iters)
        x_br, min_lb, _, _ = self.kern.inner_min(
            self.c, self.d, self.indptr, self.indices, x_ws, y,
            self.b_black, self.eta_inner, inner_tol, self.opts.inner_max_iters)
        if not (np.isfinite(max_ub) and np.isfinite(min_lb)):
            raise RuntimeError("non-finite exposure evaluation; state is corrupted")
        gap = max_ub - min_lb
        return (gap if gap > 0.0 else 0.0), x_br, y_br

    def solve(self, warm: WarmStart | None, collect_trace: bool) -> Equilibrium:
        opts = self.opts
        uniform_x = np.full(self.n, self.b_black / self.n)
        uniform_y = np.full(self.n, self.b_red / self.n)
        if warm is None:
            x, y = uniform_x.copy(), uniform_y.copy()
            x_ws, y_ws = uniform_x.copy(), uniform_y.copy()
        else:
            x = project_simplex(warm.x, self.b_black)
            y = project_simplex(warm.y, self.b_red)
            x_ws = project_simplex(warm.x_br, self.b_black)
            y_ws = project_simplex(warm.y_br, self.b_red)
        sx = np.zeros(self.n)
        sy = np.zeros(self.n)
        eta0 = None if opts.step_rule == "diminishing" else 0.0
        rule = 1 if opts.step_rule == "fixed" else 0
        eta_fixed = opts.eta if opts.eta is not None else 0.0

        best_gap = np.inf
        best_x = x
        best_y = y
        best_val = None
        trace = [] if collect_trace else None
        k = 0
        for cp in _checkpoints(opts.max_iters):
            if cp > k:
                if eta0 is None:
                    eta0 = self._eta0(uniform_x, uniform_y)
                x, y, sx, sy = self.kern.pgda_advance(
                    self.c, self.d, self.indptr, self.indices,
                    self.b_black, self.b_red, x, y, sx, sy,
                    k, cp, eta0, eta_fixed, rule)
                self.evals += cp - k
                k = cp
            # candidate slate: averaged iterates (when on), then the raw
            # pair, then best-response polish rounds; cheapest wins by gap
            if opts.averaging and k > 0:
                candidates = [(sx / k, sy / k), (x, y)]
            else:
                candidates = [(x, y)]
            inner_tol = opts.tol * 0.1
            for rnd in range(1 + _POLISH_ROUNDS):
                if best_gap <= opts.tol:
                    break
                if rnd > 0:
                    candidates = [(x_ws, y_ws)]
                for cx, cy in candidates:
                    gap, x_ws, y_ws = self.certify(cx, cy, y_ws, x_ws, inner_tol)
                    if gap < best_gap:
                        best_gap = gap
                        best_x, best_y = cx.copy(), cy.copy()
                        best_val = None
                    if best_gap <= opts.tol:
                        break
            if collect_trace:
                step = eta_fixed if rule == 1 else (
                    (eta0 if eta0 is not None else 0.0) / np.sqrt(max(k, 1)))
                if best_val is None:
                    best_val = self.value(best_x, best_y)
                trace.append((k, best_val, best_gap, step))
            if best_gap <= opts.tol:
                break
        if best_val is None:
            best_val = self.value(best_x, best_y)
        return Equilibrium(
            x_star=best_x, y_star=best_y, value=best_val,
            gap=float(best_gap), iterations=k,
            converged=bool(best_gap <= opts.tol), trace=trace,
            warm=WarmStart(x=best_x, y=best_y, x_br=x_ws, y_br=y_ws))

    def _eta0(self, uniform_x, uniform_y) -> float:
        if self.opts.eta0 is not None:
            return self.opts.eta0
        _, gx, gy = self.grads(uniform_x, uniform_y)
        g0 = float(np.sqrt(gx @ gx + gy @ gy))
        if g0 <= 0.0:
            return 1.0
        return max(self.b_black, self.b_red) / (self.n * g0)


def _engine_for_state(state: UrnState, b_black, b_red, opts) -> _Engine:
    n = state.net.node_count
    if n > ENUMERATION_CAP:
        raise ValueError(
            f"solver needs exact enumeration; cap is {ENUMERATION_CAP} nodes")
    if b_black < 0.0 or b_red < 0.0:
        raise ValueError("budgets must be nonnegative")
    coeffs = coefficients(state)
    indptr, indices = state.net.closed_csr()
    return _Engine(coeffs.c, coeffs.d, indptr, indices, b_black, b_red, opts)


def solve_equilibrium(state: UrnState, budget_black: float, budget_red: float,
                      opts: SolverOptions | None = None,
                      warm: WarmStart | None = None,
                      collect_trace: bool = False) -> Equilibrium:
    """Equilibrium of the one-step exposure game on the given state.

    Returns the best certified candidate. converged=False with the
    achieved gap (never an exception) when the tolerance was not reached
    within max_iters.
    """
    opts = opts or SolverOptions()
    eng = _engine_for_state(state, budget_black, budget_red, opts)
    return eng.solve(warm, collect_trace)


def solve_on_coefficients(c, d, indptr, indices, budget_black: float, budget_red: float,
                          opts: SolverOptions | None = None,
                          warm: WarmStart | None = None,
                          collect_trace: bool = False) -> Equilibrium:
    """solve_equilibrium working directly on super-urn coefficient arrays.

    Skips UrnState bookkeeping; meant for hot loops that already track
    c and d incrementally (the experiment harness).
    """
    opts = opts or SolverOptions()
    eng = _Engine(np.ascontiguousarray(c, dtype=np.float64),
                  np.ascontiguousarray(d, dtype=np.float64),
                  indptr, indices, budget_black, budget_red, opts)
    return eng.solve(warm, collect_trace)


def restricted_gap(state: UrnState, x, y, budget_black: float, budget_red: float,
                   opts: SolverOptions | None = None) -> float:
    """Certified duality gap of a feasible pair; >= 0, 0 only at a saddle.

    Inner problems run to tolerance tol/10; if they hit their iteration
    cap first the looser (still valid) bound is returned.
    """
    opts = opts or SolverOptions()
    eng = _engine_for_state(state, budget_black, budget_red, opts)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape != (eng.n,) or y.shape != (eng.n,):
        raise ValueError(f"policy vectors must have shape ({eng.n},)")
    if np.any(x < 0.0) or np.any(y < 0.0):
        raise ValueError("policy vectors must be nonnegative")
    if x.sum() > budget_black + 1e-9 or y.sum() > budget_red + 1e-9:
        raise ValueError("policy exceeds its budget")
    gap, _, _ = eng.certify(x, y,
                            project_simplex(y, budget_red),
                            project_simplex(x, budget_black),
                            opts.tol * 0.1)
    return float(gap)


def write_trace_csv(trace, fh) -> None:
    """Rows `iter,value,gap,step`, one per certified checkpoint."""
    fh.write("iter,value,gap,step\n")
    for it, value, gap, step in trace:
        fh.write(f"{it},{_FMT.format(value)},{_FMT.format(gap)},{_FMT.format(step)}\n")
