from __future__ import annotations

import numpy as np
import pytest

from preamble_forge import barrier
from preamble_forge.errors import ConvergenceError, InvalidArgumentError


def _ball(radius2):
    def fn(x):
        return float(x @ x) - radius2, 2 * x, 2 * np.eye(x.size)

    return barrier.Constraint("ball", fn, lambda x: float(x @ x) - radius2)


def _dist(c):
    def fn(x):
        d = x - c
        return float(d @ d), 2 * d, 2 * np.eye(x.size)

    return fn, lambda x: float((x - c) @ (x - c))


def test_projection_onto_ball():
    c = np.array([3.0, 4.0])
    obj, val = _dist(c)
    res = barrier.minimize(obj, val, [_ball(1.0)], np.zeros(2))
    assert res.converged
    assert np.allclose(res.x, c / 5, atol=1e-8)
    assert res.active["ball"]
    assert res.kkt_residual < 1e-8


def test_unconstrained_optimum_inside():
    c = np.array([0.1, -0.2])
    obj, val = _dist(c)
    res = barrier.minimize(obj, val, [_ball(1.0)], np.zeros(2), abs_gap=1e-12)
    assert np.allclose(res.x, c, atol=1e-6)
    assert not res.active["ball"]


def test_box_guard_holds():
    obj, val = _dist(np.array([-1.0, 2.0]))
    guard = barrier.BoxGuard(np.array([0]), 0.25)
    res = barrier.minimize(obj, val, [_ball(9.0)], np.array([1.0, 0.0]), guard=guard)
    assert res.x[0] >= 0.25
    assert res.x[0] == pytest.approx(0.25, abs=1e-6)
    assert res.x[1] == pytest.approx(2.0, abs=1e-6)


def test_infeasible_start_rejected():
    obj, val = _dist(np.zeros(2))
    with pytest.raises(InvalidArgumentError):
        barrier.minimize(obj, val, [_ball(1.0)], np.array([2.0, 0.0]))


def test_newton_cap_raises_with_iterate():
    obj, val = _dist(np.array([3.0, 4.0]))
    with pytest.raises(ConvergenceError) as info:
        barrier.minimize(obj, val, [_ball(1.0)], np.zeros(2), max_newton=2)
    assert info.value.iterations == 2
    assert info.value.last_iterate.shape == (2,)


def test_stationarity_residual():
    g = np.array([1.0, 0.0])
    assert barrier.stationarity_residual(g, []) == 1.0
    assert barrier.stationarity_residual(np.zeros(2), []) == 0.0
    assert barrier.stationarity_residual(g, [np.array([-2.0, 0.0])]) == pytest.approx(0.0, abs=1e-14)
    # a multiplier would have to be negative here
    assert barrier.stationarity_residual(g, [np.array([2.0, 0.0])]) == pytest.approx(1.0)
