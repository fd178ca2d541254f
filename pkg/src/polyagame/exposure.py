"""One-step expected network exposure and its gradients.

Given the urn state after n-1 steps, the expected exposure of step n is
a function of the curing additions x (black, applied on healthy draws)
and infection additions y (red, applied on infected draws):

    E(x, y) = (1/N) sum_i sum_z w(z) * (c_i + u_i(z)) / (c_i + d_i + u_i(z) + v_i(z))

with u_i = sum_{j in N_i'} z_j y_j, v_i = sum_{j in N_i'} (1-z_j) x_j,
where N_i' is the closed neighborhood, c_i/d_i are the red/black
super-urn masses, and w(z) is the product of per-node draw
probabilities. E is convex in x, concave in y, nonincreasing in each
x_j and nondecreasing in each y_j.

Exact evaluation enumerates all 2^N outcomes and refuses above
ENUMERATION_CAP nodes; the Monte Carlo estimator must be requested
explicitly in that regime so no solver silently loses its exactness
guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .graphs import Network
from .urns import UrnState

ENUMERATION_CAP = 20


@dataclass
class ExposureCoefficients:
    """Super-urn red mass c_i and black mass d_i per node.

    c_i + d_i is the total super-urn mass and c_i/(c_i + d_i) the
    current super-urn proportion.
    """

    c: np.ndarray
    d: np.ndarray


@dataclass
class OutcomeMatrices:
    """Adjacency split by a fixed outcome z: C_ij = A_ij z_j, D_ij = A_ij (1 - z_j)."""

    C: np.ndarray
    D: np.ndarray


@dataclass
class ExposureEvaluation:
    """Value and analytic gradients of the expected one-step exposure.

    grad_x is entrywise nonpositive and grad_y entrywise nonnegative.
    """

    value: float
    grad_x: np.ndarray
    grad_y: np.ndarray


def coefficients(state: UrnState) -> ExposureCoefficients:
    """Closed-neighborhood red/black mass sums of the current state."""
    indptr, indices = state.net.closed_csr()
    c = np.add.reduceat(state.red_masses()[indices], indptr[:-1])
    d = np.add.reduceat(state.black_masses()[indices], indptr[:-1])
    return ExposureCoefficients(c, d)


def outcome_matrices(net: Network, z) -> OutcomeMatrices:
    """Split the closed-neighborhood adjacency by the outcome vector z."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (net.node_count,) or not np.all((z == 0.0) | (z == 1.0)):
        raise ValueError("z must be a binary vector with one entry per node")
    a = self_adjacency_matrix(net)
    return OutcomeMatrices(C=a * z, D=a * (1.0 - z))


def self_adjacency_matrix(net: Network) -> np.ndarray:
    """Dense float adjacency with unit diagonal (A_ii = 1)."""
    indptr, indices = net.closed_csr()
    n = net.node_count
    a = np.zeros((n, n))
    for i in range(n):
        a[i, indices[indptr[i]:indptr[i + 1]]] = 1.0
    return a


def node_exposure(coeffs: ExposureCoefficients, matrices: OutcomeMatrices,
                  x, y, i: int) -> float:
    """f_i(x, y, z) for the outcome baked into matrices."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x < 0.0) or np.any(y < 0.0):
        raise ValueError("policy vectors must be nonnegative")
    ci = coeffs.c[i]
    di = coeffs.d[i]
    u = float(matrices.C[i] @ y)
    v = float(matrices.D[i] @ x)
    return (ci + u) / (ci + di + u + v)


def _policy_arrays(n: int, x, y):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape != (n,) or y.shape != (n,):
        raise ValueError(f"policy vectors must have shape ({n},)")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("policy vectors must be finite")
    if np.any(x < 0.0) or np.any(y < 0.0):
        raise ValueError("policy vectors must be nonnegative")
    return x, y


def expected_exposure_exact(state: UrnState, x, y) -> ExposureEvaluation:
    """E(x, y) with analytic gradients, by full outcome enumeration.

    Raises for networks above ENUMERATION_CAP nodes; use
    expected_exposure_mc there instead.
    """
    n = state.net.node_count
    if n > ENUMERATION_CAP:
        raise ValueError(
            f"exact enumeration needs 2^{n} outcomes; cap is {ENUMERATION_CAP} nodes. "
            "Request the Monte Carlo estimator explicitly for larger networks.")
    x, y = _policy_arrays(n, x, y)
    coeffs = coefficients(state)
    indptr, indices = state.net.closed_csr()
    value, gx, gy = backend.kernels().exact_eval(coeffs.c, coeffs.d, x, y, indptr, indices)
    return ExposureEvaluation(value=float(value), grad_x=gx, grad_y=gy)


def expected_exposure_mc(state: UrnState, x, y, samples: int, seed: int):
    """Monte Carlo estimate of E(x, y); returns (estimate, stderr).

    Deterministic given seed; stderr is the sample standard deviation
    over per-outcome exposures divided by sqrt(samples) (0 when
    samples == 1).
    """
    n = state.net.node_count
    if samples < 1:
        raise ValueError("samples must be a positive integer")
    x, y = _policy_arrays(n, x, y)
    coeffs = coefficients(state)
    indptr, indices = state.net.closed_csr()
    uniforms = np.random.default_rng(seed).random((int(samples), n))
    mean, stderr = backend.kernels().mc_eval(coeffs.c, coeffs.d, x, y, indptr, indices, uniforms)
    return float(mean), float(stderr)


def gradient_check(state: UrnState, x, y, h: float = 1e-5) -> float:
    """Max relative error of the analytic gradients against central differences.

    Componentwise absolute errors are scaled by the largest analytic
    gradient magnitude, so near-zero components do not blow up the
    ratio. Requires an interior point (x, y > 0 entrywise, margins > h).
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    n = state.net.node_count
    x, y = _policy_arrays(n, x, y)
    ev = expected_exposure_exact(state, x, y)
    fd_x = np.zeros(n)
    fd_y = np.zeros(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        fd_x[j] = (expected_exposure_exact(state, x + e, y).value
                   - expected_exposure_exact(state, x - e, y).value) / (2.0 * h)
        fd_y[j] = (expected_exposure_exact(state, x, y + e).value
                   - expected_exposure_exact(state, x, y - e).value) / (2.0 * h)
    scale = max(np.max(np.abs(ev.grad_x)), np.max(np.abs(ev.grad_y)), 1e-12)
    err = max(np.max(np.abs(ev.grad_x - fd_x)), np.max(np.abs(ev.grad_y - fd_y)))
    return float(err / scale)
