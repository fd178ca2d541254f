"""Numba-jitted kernel implementations.

Signature-for-signature twin of kernels_numpy; see that module for the
contracts. Enumeration walks the outcomes in Gray-code order so each
step updates the neighborhood sums for a single flipped node; the
outcome weight is rebuilt from scratch every step, which keeps it exact
instead of accumulating ratio drift. Importing this module requires
numba; the backend module handles the fallback.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True, fastmath=False)


@njit(**_JIT)
def project_simplex(v, budget):
    n = v.size
    out = np.zeros(n)
    if budget <= 0.0:
        return out
    u = np.sort(v)[::-1]
    cs = 0.0
    tau = 0.0
    # feasible prefixes form a contiguous block starting at j=0
    for j in range(n):
        cs += u[j]
        t = (cs - budget) / (j + 1.0)
        if u[j] - t > 0.0:
            tau = t
    for i in range(n):
        w = v[i] - tau
        out[i] = w if w > 0.0 else 0.0
    return out


@njit(**_JIT)
def exact_eval(c, d, x, y, indptr, indices):
    n = c.size
    s = np.empty(n)
    for i in range(n):
        s[i] = c[i] / (c[i] + d[i])
    z = np.zeros(n, dtype=np.int8)
    u = np.zeros(n)
    v = np.zeros(n)
    # outcome 0: all draws black, so every node ships its curing mass
    for j in range(n):
        for idx in range(indptr[j], indptr[j + 1]):
            v[indices[idx]] += x[j]
    p = np.empty(n)
    q = np.empty(n)
    value = 0.0
    gx = np.zeros(n)
    gy = np.zeros(n)
    total = 1 << n
    for k in range(total):
        if k > 0:
            # Gray code: flip bit ctz(k), update neighbor sums of that node
            m = k
            b = 0
            while (m & 1) == 0:
                m >>= 1
                b += 1
            if z[b] == 0:
                z[b] = 1
                for idx in range(indptr[b], indptr[b + 1]):
                    i = indices[idx]
                    u[i] += y[b]
                    v[i] -= x[b]
            else:
                z[b] = 0
                for idx in range(indptr[b], indptr[b + 1]):
                    i = indices[idx]
                    u[i] -= y[b]
                    v[i] += x[b]
        w = 1.0
        for i in range(n):
            w *= s[i] if z[i] == 1 else 1.0 - s[i]
        fs = 0.0
        for i in range(n):
            den = c[i] + d[i] + u[i] + v[i]
            fi = (c[i] + u[i]) / den
            fs += fi
            p[i] = fi / den
            q[i] = (d[i] + v[i]) / (den * den)
        value += w * fs
        for j in range(n):
            acc = 0.0
            if z[j] == 1:
                for idx in range(indptr[j], indptr[j + 1]):
                    acc += q[indices[idx]]
                gy[j] += w * acc
            else:
                for idx in range(indptr[j], indptr[j + 1]):
                    acc += p[indices[idx]]
                gx[j] -= w * acc
    return value / n, gx / n, gy / n


@njit(**_JIT)
def mc_eval(c, d, x, y, indptr, indices, uniforms):
    n = c.size
    m = uniforms.shape[0]
    s = np.empty(n)
    for i in range(n):
        s[i] = c[i] / (c[i] + d[i])
    u = np.empty(n)
    v = np.empty(n)
    mean = 0.0
    m2 = 0.0
    for k in range(m):
        for i in range(n):
            u[i] = 0.0
            v[i] = 0.0
        for j in range(n):
            if uniforms[k, j] < s[j]:
                for idx in range(indptr[j], indptr[j + 1]):
                    u[indices[idx]] += y[j]
            else:
                for idx in range(indptr[j], indptr[j + 1]):
                    v[indices[idx]] += x[j]
        fs = 0.0
        for i in range(n):
            fs += (c[i] + u[i]) / (c[i] + d[i] + u[i] + v[i])
        val = fs / n
        # Welford keeps the variance stable over long sample streams
        delta = val - mean
        mean += delta / (k + 1)
        m2 += delta * (val - mean)
    stderr = np.sqrt(m2 / ((m - 1.0) * m)) if m > 1 else 0.0
    return mean, stderr


@njit(**_JIT)
def pgda_advance(c, d, indptr, indices, b_black, b_red, x, y, sx, sy,
                 k_from, k_to, eta0, eta_fixed, rule):
    x = x.copy()
    y = y.copy()
    sx = sx.copy()
    sy = sy.copy()
    for k in range(k_from + 1, k_to + 1):
        val, gx, gy = exact_eval(c, d, x, y, indptr, indices)
        eta = eta_fixed if rule == 1 else eta0 / np.sqrt(k + 0.0)
        x = project_simplex(x - eta * gx, b_black)
        y = project_simplex(y + eta * gy, b_red)
        for i in range(x.size):
            sx[i] += x[i]
            sy[i] += y[i]
    return x, y, sx, sy


@njit(**_JIT)
def inner_max(c, d, indptr, indices, x, y0, budget, eta, tol, max_iters):
    n = y0.size
    y = y0.copy()
    y_pg_prev = y0.copy()
    y_best = y0.copy()
    t = 1.0
    best = -np.inf
    ub = np.inf
    prev_val = -np.inf
    it = 0
    while it < max_iters:
        val, gx, gy = exact_eval(c, d, x, y, indptr, indices)
        it += 1
        if val > best:
            best = val
            for i in range(n):
                y_best[i] = y[i]
        gmax = gy[0]
        dot = 0.0
        for i in range(n):
            if gy[i] > gmax:
                gmax = gy[i]
            dot += gy[i] * y[i]
        fw = budget * gmax - dot
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


@njit(**_JIT)
def inner_min(c, d, indptr, indices, x0, y, budget, eta, tol, max_iters):
    n = x0.size
    x = x0.copy()
    x_pg_prev = x0.copy()
    x_best = x0.copy()
    t = 1.0
    best = np.inf
    lb = -np.inf
    prev_val = np.inf
    it = 0
    while it < max_iters:
        val, gx, gy = exact_eval(c, d, x, y, indptr, indices)
        it += 1
        if val < best:
            best = val
            for i in range(n):
                x_best[i] = x[i]
        gmin = gx[0]
        dot = 0.0
        for i in range(n):
            if gx[i] < gmin:
                gmin = gx[i]
            dot += gx[i] * x[i]
        fw = dot - budget * gmin
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
