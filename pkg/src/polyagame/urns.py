"""Polya urn dynamics: the classical single-urn process and the network
contagion process with super-urn draws.

Ball masses are real-valued. Per-node urns are stored as the decomposition
(initial, added_red, added_black) so downstream exposure evaluation can
recover the red/black coefficient split without replaying history.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .graphs import Network

_FMT = "{:.12g}"


@dataclass
class ClassicalUrn:
    """Single urn with initial red fraction rho and correlation delta.

    The red proportion after n draws is
    (rho + delta * red_draws) / (1 + n * delta).
    """

    rho: float
    delta: float
    draw_count: int = 0
    red_draws: int = 0

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ValueError(f"rho must lie in (0,1), got {self.rho}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")

    @classmethod
    def from_counts(cls, red: float, black: float, delta_balls: float) -> "ClassicalUrn":
        total = float(red) + float(black)
        return cls(rho=float(red) / total, delta=float(delta_balls) / total)

    @property
    def proportion(self) -> float:
        """Red proportion after draw_count draws."""
        return (self.rho + self.delta * self.red_draws) / (1.0 + self.draw_count * self.delta)


def classical_step(urn: ClassicalUrn, rand: float):
    """One draw: red with probability equal to the current proportion.

    Returns (draw, updated urn); the input urn is not modified.
    """
    draw = 1 if rand < urn.proportion else 0
    return draw, ClassicalUrn(
        rho=urn.rho,
        delta=urn.delta,
        draw_count=urn.draw_count + 1,
        red_draws=urn.red_draws + draw,
    )


@dataclass
class UrnState:
    """Per-node ball masses of the network process after `step` draws."""

    net: Network
    initial_red: np.ndarray
    initial_black: np.ndarray
    added_red: np.ndarray
    added_black: np.ndarray
    step: int = 0

    def __post_init__(self):
        n = self.net.node_count
        for name in ("initial_red", "initial_black", "added_red", "added_black"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            setattr(self, name, arr)
        if np.any(self.initial_red <= 0.0) or np.any(self.initial_black <= 0.0):
            raise ValueError("initial ball masses must be strictly positive")
        if np.any(self.added_red < 0.0) or np.any(self.added_black < 0.0):
            raise ValueError("added ball masses must be nonnegative")
        if self.step < 0:
            raise ValueError("step must be nonnegative")

    @classmethod
    def uniform(cls, net: Network, red: float = 10.0, black: float = 10.0) -> "UrnState":
        n = net.node_count
        return cls(net, np.full(n, float(red)), np.full(n, float(black)),
                   np.zeros(n), np.zeros(n))

    @classmethod
    def initial(cls, net: Network, red, black) -> "UrnState":
        red = np.broadcast_to(np.asarray(red, dtype=np.float64), (net.node_count,)).copy()
        black = np.broadcast_to(np.asarray(black, dtype=np.float64), (net.node_count,)).copy()
        return cls(net, red, black, np.zeros(net.node_count), np.zeros(net.node_count))

    def red_masses(self) -> np.ndarray:
        return self.initial_red + self.added_red

    def black_masses(self) -> np.ndarray:
        return self.initial_black + self.added_black

    def node_totals(self) -> np.ndarray:
        """X_i: total balls in each node's individual urn."""
        return self.red_masses() + self.black_masses()

    def copy(self) -> "UrnState":
        return UrnState(self.net, self.initial_red.copy(), self.initial_black.copy(),
                        self.added_red.copy(), self.added_black.copy(), self.step)


@dataclass
class PolicyPair:
    """Curing (x) and infection (y) mass additions with per-player budgets."""

    x: np.ndarray
    y: np.ndarray
    budget_black: float
    budget_red: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.budget_black < 0.0 or self.budget_red < 0.0:
            raise ValueError("budgets must be nonnegative")
        if np.any(self.x < 0.0) or np.any(self.y < 0.0):
            raise ValueError("policy entries must be nonnegative")

    @classmethod
    def uniform(cls, n: int, budget_black: float, budget_red: float) -> "PolicyPair":
        return cls(np.full(n, budget_black / n), np.full(n, budget_red / n),
                   budget_black, budget_red)

    def feasible(self, atol: float = 1e-9) -> bool:
        return (self.x.sum() <= self.budget_black + atol
                and self.y.sum() <= self.budget_red + atol)


@dataclass
class Trajectory:
    """Draw history of one simulated run.

    draws[i, t] is Z_{i, t+1}; super_urn_props[i, t] is S_{i, t+1} (after
    the step-(t+1) additions); exposures[t] is their node average.
    """

    draws: np.ndarray
    super_urn_props: np.ndarray
    exposures: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    budget_black: float
    budget_red: float
    seed: int
    trial: int = 0

    @property
    def horizon(self) -> int:
        return self.draws.shape[1]

    def policy(self, n: int) -> PolicyPair:
        """PolicyPair applied at step n (1-based)."""
        return PolicyPair(self.xs[n - 1], self.ys[n - 1], self.budget_black, self.budget_red)

    def write_csv(self, fh, header: bool = True) -> None:
        """Rows `trial,n,node,z,S_i`, one per (step, node)."""
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(["trial", "n", "node", "z", "S_i"])
        n_nodes, t_count = self.draws.shape
        for t in range(t_count):
            for i in range(n_nodes):
                writer.writerow([self.trial, t + 1, i, int(self.draws[i, t]),
                                 _FMT.format(self.super_urn_props[i, t])])


def super_urn_proportion(state: UrnState, i: int) -> float:
    """S_i: red fraction of node i's super urn at the current step."""
    if not (0 <= i < state.net.node_count):
        raise ValueError(f"node id {i} outside 0..{state.net.node_count - 1}")
    indptr, indices = state.net.closed_csr()
    members = indices[indptr[i]:indptr[i + 1]]
    red = float(np.sum(state.red_masses()[members]))
    total = red + float(np.sum(state.black_masses()[members]))
    return red / total


def all_super_urn_proportions(state: UrnState) -> np.ndarray:
    indptr, indices = state.net.closed_csr()
    red = np.add.reduceat(state.red_masses()[indices], indptr[:-1])
    black = np.add.reduceat(state.black_masses()[indices], indptr[:-1])
    return red / (red + black)


def network_exposure(state: UrnState) -> float:
    """Node average of the super-urn red proportions."""
    return float(np.mean(all_super_urn_proportions(state)))


def network_step(state: UrnState, policy: PolicyPair, rands: np.ndarray):
    """Draw once for every node and apply the policy additions.

    Node i draws red with probability S_{i} of the incoming state; a red
    draw adds y_i red balls, a black draw adds x_i black balls. Returns
    (z, new state); the incoming state is left untouched.
    """
    n = state.net.node_count
    rands = np.asarray(rands, dtype=np.float64)
    if rands.shape != (n,):
        raise ValueError(f"need exactly {n} uniform samples")
    if not policy.feasible():
        raise ValueError("policy exceeds its budget")
    if policy.x.shape != (n,) or policy.y.shape != (n,):
        raise ValueError("policy dimension does not match the network")
    probs = all_super_urn_proportions(state)
    z = (rands < probs).astype(np.int8)
    new = state.copy()
    new.added_red = new.added_red + np.where(z == 1, policy.y, 0.0)
    new.added_black = new.added_black + np.where(z == 1, 0.0, policy.x)
    new.step = state.step + 1
    return z, new


def trial_uniforms(seed: int, trial: int, horizon: int, n: int) -> np.ndarray:
    """(horizon, n) uniforms from the (seed, trial) substream.

    Row t holds the step-(t+1) samples in node-id order, so trials are
    independent of each other and of scheduling order.
    """
    if seed < 0 or trial < 0:
        raise ValueError("seed and trial index must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), int(trial))))
    return rng.random((horizon, n))


def simulate_trajectory(net: Network, init: UrnState, policy_provider, horizon: int,
                        seed: int, trial: int = 0) -> Trajectory:
    """Run the network process for `horizon` steps.

    policy_provider(state) must return a feasible PolicyPair for every
    reachable state. The result is a deterministic function of (seed,
    trial, inputs).
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if init.net is not net and init.net != net:
        raise ValueError("initial state belongs to a different network")
    n = net.node_count
    uniforms = trial_uniforms(seed, trial, horizon, n)
    draws = np.zeros((n, horizon), dtype=np.int8)
    props = np.zeros((n, horizon))
    exposures = np.zeros(horizon)
    xs = np.zeros((horizon, n))
    ys = np.zeros((horizon, n))
    state = init
    budget_black = budget_red = 0.0
    for t in range(horizon):
        policy = policy_provider(state)
        if not policy.feasible():
            raise ValueError(f"policy provider returned an infeasible policy at step {t + 1}")
        z, state = network_step(state, policy, uniforms[t])
        draws[:, t] = z
        props[:, t] = all_super_urn_proportions(state)
        exposures[t] = props[:, t].mean()
        xs[t] = policy.x
        ys[t] = policy.y
        budget_black, budget_red = policy.budget_black, policy.budget_red
    return Trajectory(draws, props, exposures, xs, ys, budget_black, budget_red,
                      seed=seed, trial=trial)
