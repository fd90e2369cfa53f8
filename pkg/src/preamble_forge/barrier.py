"""Log-barrier Newton method for smooth convex programs.

Solves ``min f(x)  s.t.  g_i(x) <= 0`` from a strictly feasible start by
minimising ``t f(x) - sum log(-g_i(x))`` for an increasing sequence of ``t``.
Each function is supplied with its gradient and Hessian.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import nnls

from .errors import ConvergenceError, InvalidArgumentError

# f(x) -> (value, gradient, hessian)
SmoothFn = Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]]


@dataclass
class Constraint:
    """Smooth convex constraint ``fn(x) <= 0``.

    ``scale`` sets the magnitude used to judge whether the constraint is
    active at the solution; ``guard`` marks numerical guards that are never
    reported as active.
    """

    name: str
    fn: SmoothFn
    value_only: Callable[[np.ndarray], float]
    scale: float = 1.0
    guard: bool = False


@dataclass
class BarrierResult:
    x: np.ndarray
    objective: float
    multipliers: dict[str, np.ndarray]
    slacks: dict[str, np.ndarray]
    active: dict[str, bool]
    newton_steps: int
    outer_iterations: int
    converged: bool
    kkt_residual: float
    objective_gradient_norm: float


@dataclass
class BoxGuard:
    """Vectorised lower bounds ``x[idx] >= floor`` handled in closed form."""

    idx: np.ndarray
    floor: float

    def slack(self, x):
        return x[self.idx] - self.floor


def _barrier_terms(x, t, objective, constraints, guard):
    f, gf, hf = objective(x)
    val = t * f
    grad = t * gf
    hess = t * hf
    for c in constraints:
        g, gg, hg = c.fn(x)
        s = -g
        val -= np.log(s)
        grad = grad + gg / s
        hess = hess + np.outer(gg, gg) / s**2 + hg / s
    if guard is not None:
        s = guard.slack(x)
        val -= np.sum(np.log(s))
        grad = grad.copy()
        grad[guard.idx] -= 1.0 / s
        hess = hess.copy()
        hess[guard.idx, guard.idx] += 1.0 / s**2
    return val, grad, hess


def _barrier_value(x, t, objective_value, constraints, guard):
    """Barrier objective, or +inf outside the strict interior."""
    total = 0.0
    for c in constraints:
        g = c.value_only(x)
        if not g < 0.0:
            return np.inf
        total -= np.log(-g)
    if guard is not None:
        s = guard.slack(x)
        if np.any(s <= 0.0):
            return np.inf
        total -= np.sum(np.log(s))
    f = objective_value(x)
    if not np.isfinite(f):
        return np.inf
    return t * f + total


def minimize(
    objective: SmoothFn,
    objective_value: Callable[[np.ndarray], float],
    constraints: list[Constraint],
    x0: np.ndarray,
    guard: BoxGuard | None = None,
    mu: float = 10.0,
    rel_gap: float = 1e-10,
    abs_gap: float = 0.0,
    max_newton: int = 5000,
    alpha: float = 0.25,
    beta: float = 0.5,
) -> BarrierResult:
    """Barrier path following; stops once ``m / t`` is below the gap target."""
    x = np.array(x0, dtype=float)
    m = len(constraints) + (0 if guard is None else guard.idx.size)
    if not np.isfinite(_barrier_value(x, 1.0, objective_value, constraints, guard)):
        raise InvalidArgumentError("barrier start point is not strictly feasible")

    f0 = objective_value(x)
    phi0 = abs(_barrier_value(x, 0.0, objective_value, constraints, guard))
    # barrier term and weighted objective of comparable size at the start
    t = max(phi0, 1.0) / max(abs(f0), 1e-300)

    steps = 0
    outer = 0
    converged = False
    while True:
        outer += 1
        previous = np.inf
        for _ in range(200):
            val, grad, hess = _barrier_terms(x, t, objective, constraints, guard)
            try:
                dx = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                dx = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            decrement = float(-grad @ dx)
            # the decrement bottoms out at the roundoff level of the slacks
            if not decrement > 1e-16 or (decrement < 1e-6 and decrement > 0.25 * previous):
                break
            previous = decrement
            step = 1.0
            while True:
                cand = x + step * dx
                cval = _barrier_value(cand, t, objective_value, constraints, guard)
                # near the centre the Armijo test drowns in roundoff of t*f;
                # Newton is in its quadratic phase there, so take the step
                if decrement < 1e-2 and np.isfinite(cval):
                    break
                if cval <= val - alpha * step * decrement:
                    break
                step *= beta
                if step < 1e-20:
                    break
            if step < 1e-20:
                break
            x = cand
            steps += 1
            if steps >= max_newton:
                raise ConvergenceError("Newton iteration limit reached", x, steps)
        f = objective_value(x)
        if m / t <= max(rel_gap * abs(f), abs_gap):
            converged = True
            break
        if t > 1e250:
            break
        t *= mu

    return _package(x, t, objective, constraints, guard, steps, outer, converged)


def _package(x, t, objective, constraints, guard, steps, outer, converged):
    f, gf, _ = objective(x)
    multipliers, slacks, active = {}, {}, {}
    active_grads = []
    for c in constraints:
        g, gg, _ = c.fn(x)
        s = -g
        multipliers[c.name] = np.array([1.0 / (t * s)])
        slacks[c.name] = np.array([s])
        is_active = (not c.guard) and s <= 1e-6 * abs(c.scale)
        active[c.name] = bool(is_active)
        if is_active:
            active_grads.append(gg)
    if guard is not None:
        s = guard.slack(x)
        multipliers["floor"] = 1.0 / (t * s)
        slacks["floor"] = s
        active["floor"] = False
    gnorm = float(np.linalg.norm(gf))
    resid = stationarity_residual(gf, active_grads)
    return BarrierResult(x, float(f), multipliers, slacks, active, steps, outer, converged, resid, gnorm)


def stationarity_residual(grad_f: np.ndarray, active_grads: list[np.ndarray]) -> float:
    """``min_{lam >= 0} ||grad_f + G lam|| / ||grad_f||`` over active constraints.

    The barrier multipliers ``1/(t s)`` carry the relative roundoff of the
    slacks, which is large once ``s`` is tiny; refitting them by nonnegative
    least squares at the final iterate avoids that.
    """
    gnorm = float(np.linalg.norm(grad_f))
    if gnorm == 0.0:
        return 0.0
    if not active_grads:
        return 1.0
    g = np.column_stack(active_grads)
    lam, resid = nnls(g, -grad_f)
    return float(resid) / gnorm
