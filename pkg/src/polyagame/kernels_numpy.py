"""Pure-numpy kernel implementations.

These are the reference kernels behind the exposure evaluator and the
saddle solver. The numba module mirrors every signature one to one; the
active implementation is chosen through the backend module. Enumeration
is chunked so the 2^N outcome table never materializes whole.

All kernels take the super-urn coefficients (c, d), the closed
neighborhood CSR (indptr, indices) of a symmetric adjacency with unit
diagonal, and policy vectors x (curing, black) and y (infection, red).
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 14


def _dense_adjacency(indptr: np.ndarray, indices: np.ndarray, n: int) -> np.ndarray:
    a = np.zeros((n, n))
    for i in range(n):
        a[i, indices[indptr[i]:indptr[i + 1]]] = 1.0
    return a


def project_simplex(v: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {u >= 0, sum(u) = budget}.

    Sort-and-threshold rule; the output does not depend on how ties are
    ordered, so the result is deterministic.
    """
    v = np.asarray(v, dtype=np.float64)
    if budget <= 0.0:
        return np.zeros(v.size)
    u = np.sort(v)[::-1]
    cs = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    # rho: last prefix whose water level stays below its smallest entry
    rho = int(np.nonzero(u - (cs - budget) / ks > 0.0)[0][-1])
    tau = (cs[rho] - budget) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def exact_eval(c, d, x, y, indptr, indices):
    """Expected one-step exposure and its gradients, by full enumeration.

    Returns (value, grad_x, grad_y) where the expectation runs over all
    2^N draw outcomes weighted by the product of per-node super-urn
    proportions.
    """
    n = c.size
    a = _dense_adjacency(indptr, indices, n)
    s = c / (c + d)
    total = 1 << n
    bits = np.arange(n, dtype=np.int64)
    value = 0.0
    gx = np.zeros(n)
    gy = np.zeros(n)
    for lo in range(0, total, _CHUNK):
        ks = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        z = ((ks[:, None] >> bits) & 1).astype(np.float64)
        w = np.prod(np.where(z == 1.0, s, 1.0 - s), axis=1)
        u = (z * y) @ a
        v = ((1.0 - z) * x) @ a
        den = c + d + u + v
        f = (c + u) / den
        value += float(w @ f.sum(axis=1))
        p = f / den
        q = (d + v) / (den * den)
        gx -= ((w[:, None] * (1.0 - z)) * (p @ a)).sum(axis=0)
        gy += ((w[:, None] * z) * (q @ a)).sum(axis=0)
    return value / n, gx / n, gy / n


def mc_eval(c, d, x, y, indptr, indices, uniforms):
    """Monte Carlo estimate of the expected one-step exposure.

    uniforms has one row per sample; z_i = uniforms[k, i] < S_i. Returns
    (mean, stderr) with stderr = sample std / sqrt(samples) (0 for a
    single sample).
    """
    n = c.size
    a = _dense_adjacency(indptr, indices, n)
    s = c / (c + d)
    m = uniforms.shape[0]
    vals = np.empty(m)
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        z = (uniforms[lo:hi] < s).astype(np.float64)
        u = (z * y) @ a
        v = ((1.0 - z) * x) @ a
        vals[lo:hi] = ((c + u) / (c + d + u + v)).mean(axis=1)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return mean, stderr


def pgda_advance(c, d, indptr, indices, b_black, b_red, x, y, sx, sy,
                 k_from, k_to, eta0, eta_fixed, rule):
    """Projected gradient descent-ascent iterations k_from+1 .. k_to.

    Both players step simultaneously from gradients at the current pair.
    rule 0: eta0/sqrt(k); rule 1: constant eta_fixed. sx, sy accumulate
    post-step iterates for averaging. Returns updated (x, y, sx, sy).
    """
    x = x.copy()
    y = y.copy()
    sx = sx.copy()
    sy = sy.copy()
    for k in range(k_from + 1, k_to + 1):
        _, gx, gy = exact_eval(c, d, x, y, indptr, indices)
        eta = eta_fixed if rule == 1 else eta0 / np.sqrt(k)
        x = project_simplex(x - eta * gx, b_black)
        y = project_simplex(y + eta * gy, b_red)
        sx = sx + x
        sy = sy + y
    return x, y, sx, sy


def inner_max(c, d, indptr, indices, x, y0, budget, eta, tol, max_iters):
    """Maximize the exposure over y on its budget simplex, x held fixed.

    Projected gradient ascent with Nesterov momentum and function-value
    restarts; every evaluation point is feasible, so the returned bounds
    lb = best observed value and ub = min over iterations of
    value + linearized headroom bracket the true maximum: lb <= max <= ub.
    Stops when ub - lb <= tol or after max_iters evaluations. Returns
    (y_best, lb, ub, iterations).
    """
    y = y0.copy()
    y_pg_prev = y0.copy()
    y_best = y0.copy()
    t = 1.0
    best = -np.inf
    ub = np.inf
    prev_val = -np.inf
    it = 0
    while it < max_iters:
        val, _, gy = exact_eval(c, d, x, y, indptr, indices)
        it += 1
        if val > best:
            best = val
            y_best = y.copy()
        fw = budget * float(gy.max()) - float(gy @ y)
        if fw < 0.0:
            fw = 0.0
        if val + fw < ub:
            ub = val + fw
        if ub - best <= tol:
            break
        y_pg = project_simplex(y + eta * gy, budget)
        if val < prev_val:
            t = 1.0
            y = y_pg
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = project_simplex(y_pg + ((t - 1.0) / t_next) * (y_pg - y_pg_prev), budget)
            t = t_next
        y_pg_prev = y_pg
        prev_val = val
    return y_best, best, ub, it


def inner_min(c, d, indptr, indices, x0, y, budget, eta, tol, max_iters):
    """Minimize the exposure over x on its budget simplex, y held fixed.

    Mirror image of inner_max; returns (x_best, lb, ub, iterations) with
    lb = max over iterations of value - linearized headroom and
    ub = best observed value, so lb <= min <= ub.
    """
    x = x0.copy()
    x_pg_prev = x0.copy()
    x_best = x0.copy()
    t = 1.0
    best = np.inf
    lb = -np.inf
    prev_val = np.inf
    it = 0
    while it < max_iters:
        val, gx, _ = exact_eval(c, d, x, y, indptr, indices)
        it += 1
        if val < best:
            best = val
            x_best = x.copy()
        fw = float(gx @ x) - budget * float(gx.min())
        if fw < 0.0:
            fw = 0.0
        if val - fw > lb:
            lb = val - fw
        if best - lb <= tol:
            break
        x_pg = project_simplex(x - eta * gx, budget)
        if val > prev_val:
            t = 1.0
            x = x_pg
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            x = project_simplex(x_pg + ((t - 1.0) / t_next) * (x_pg - x_pg_prev), budget)
            t = t_next
        x_pg_prev = x_pg
        prev_val = val
    return x_best, lb, best, it
