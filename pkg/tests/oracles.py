"""Reference implementations used only by the tests.

They are written independently of the package internals: explicit loops for
the spectrum operator, and a dual-bisection projected-gradient method for the
min-NEF problem.
"""
from __future__ import annotations

import numpy as np


def spectrum_matrix_loops(n, n_cp, l_w, l_os, pinch, p):
    """Oversampled spectrum of a frequency-domain preamble, sample by sample."""
    x = np.zeros(n, complex)
    for t in range(n):
        for k in range(n):
            x[t] += p[k] * np.exp(2j * np.pi * k * t / n)
    x /= np.sqrt(n)
    # CP, then the pinching prefix/suffix continue the periodic core symbol
    lead = n_cp + (l_w if pinch else 0)
    tail = l_w if pinch else 0
    s = np.array([x[(t - lead) % n] for t in range(lead + n + tail)])
    if pinch and l_w:
        w = [0.5 * (1 - np.cos(np.pi * (k + 1) / (l_w + 1))) for k in range(l_w)]
        for k in range(l_w):
            s[k] *= w[k]
            s[-1 - k] *= w[k]
    u = l_os * len(s)
    z = np.zeros(u, complex)
    for j in range(u):
        for t in range(len(s)):
            z[j] += s[t] * np.exp(-2j * np.pi * j * t / u)
    return z / np.sqrt(u)


def project_ball_cone(x, pos, radius):
    """Projection onto {||x|| <= radius, x[pos] >= 0}: clip the cone, then shrink."""
    y = x.copy()
    y[pos] = np.maximum(y[pos], 0.0)
    nrm = np.linalg.norm(y)
    if nrm > radius:
        y *= radius / nrm
    return y


def _pg_penalised(a, pos, radius, lam, x0, iters=20000, tol=1e-15):
    """min sum 1/x_pos^2 + lam x'Ax over the ball-cone, accelerated projected gradient."""

    def f(x):
        xk = x[pos]
        if np.any(xk <= 0):
            return np.inf
        return np.sum(1.0 / xk**2) + lam * x @ a @ x

    def grad(x):
        g = 2 * lam * (a @ x)
        g[pos] += -2.0 / x[pos] ** 3
        return g

    x = x0.copy()
    y = x.copy()
    theta = 1.0
    step = 1.0
    fx = f(x)
    for _ in range(iters):
        gy = grad(y)
        fy = f(y)
        while True:
            cand = project_ball_cone(y - step * gy, pos, radius)
            d = cand - y
            fc = f(cand)
            if fc <= fy + gy @ d + (d @ d) / (2 * step):
                break
            step *= 0.5
        if fc > fx:  # restart momentum
            y = x.copy()
            theta = 1.0
            step *= 2.0
            continue
        theta_next = 0.5 * (1 + np.sqrt(1 + 4 * theta**2))
        y = cand + (theta - 1) / theta_next * (cand - x)
        theta = theta_next
        done = abs(fx - fc) <= tol * abs(fc)
        x, fx = cand, fc
        step *= 1.5
        if done:
            break
    return x


def min_nef_oracle(a, pos, t_p, epsilon, dim):
    """Optimal objective of min sum_K 1/P_k^2, ||P||^2 <= t_p, P'AP <= epsilon.

    Dual bisection on the OOB multiplier; each inner problem is solved by
    projected gradient.  Returns (objective, P).
    """
    radius = np.sqrt(t_p)
    x0 = np.zeros(dim)
    x0[pos] = radius / np.sqrt(len(pos))
    x = _pg_penalised(a, pos, radius, 0.0, x0)
    if x @ a @ x <= epsilon:
        return float(np.sum(1 / x[pos] ** 2)), x
    lo, hi = 0.0, 1.0
    while True:
        xh = _pg_penalised(a, pos, radius, hi, x)
        if xh @ a @ xh <= epsilon:
            break
        lo, hi = hi, hi * 4
    best = xh
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        xm = _pg_penalised(a, pos, radius, mid, best)
        if xm @ a @ xm <= epsilon:
            hi, best = mid, xm
        else:
            lo = mid
        if hi - lo <= 1e-13 * hi:
            break
    return float(np.sum(1 / best[pos] ** 2)), best
