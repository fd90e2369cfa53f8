"""Convex preamble design under power, OOB and NEF constraints.

Two problems are supported:

* ``MIN_NEF``: minimise ``sum_k 1/P_k^2`` over the estimation bins subject to
  ``||P||^2 <= t_p`` and ``||S Z||^2 <= epsilon``;
* ``MIN_OOB``: minimise ``||S Z||^2`` subject to ``||P||^2 <= t_p`` and
  ``sum_k 1/P_k^2 <= xi_0``.

Preambles are real with strictly positive in-band entries.  Under that
relaxation the epigraph/Schur-complement semidefinite form is the same
program as the smooth one solved here, so no cone solver is involved; the
returned KKT residual certifies optimality instead.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import barrier
from .errors import ConvergenceError, InfeasibleError, InvalidArgumentError
from .spectral_ops import FrameConfig, SpectrumOperator, build_spectrum_operator, fractional_oob

FLOOR_FACTOR = 1e-8


class Mode(str, enum.Enum):
    MIN_NEF = "min-nef"
    MIN_OOB = "min-oob"


class Mask(str, enum.Enum):
    AFV = "afv"  # every bin is a variable
    EFV = "efv"  # only the estimation bins; the rest are zero


@dataclass(frozen=True)
class DesignProblem:
    mode: Mode
    t_p: float
    cfg: FrameConfig
    mask: Mask = Mask.AFV
    epsilon: float | None = None
    xi_0: float | None = None
    # bins forced to zero on top of the mask (used by comb designs)
    zero_indices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "mask", Mask(self.mask))
        object.__setattr__(self, "zero_indices", tuple(int(i) for i in self.zero_indices))
        if not self.t_p > 0:
            raise InvalidArgumentError("t_p must be positive")
        if self.mode is Mode.MIN_NEF:
            if self.epsilon is None or self.epsilon < 0:
                raise InvalidArgumentError("min-nef needs a nonnegative epsilon")
        elif self.xi_0 is None or self.xi_0 < 0:
            raise InvalidArgumentError("min-oob needs a nonnegative xi_0")
        if set(self.zero_indices) & set(self.cfg.k_set):
            raise InvalidArgumentError("zero_indices may not touch k_set")

    @property
    def free_indices(self) -> np.ndarray:
        if self.mask is Mask.EFV:
            return np.array(self.cfg.k_set)
        zero = set(self.zero_indices)
        return np.array([i for i in range(self.cfg.n) if i not in zero])

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "t_p": self.t_p,
            "epsilon": self.epsilon,
            "xi_0": self.xi_0,
            "mask": self.mask.value,
            "zero_indices": list(self.zero_indices),
            "cfg": config_to_dict(self.cfg),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DesignProblem":
        return cls(
            mode=Mode(d["mode"]),
            t_p=float(d["t_p"]),
            cfg=config_from_dict(d["cfg"]),
            mask=Mask(d.get("mask", "afv")),
            epsilon=d.get("epsilon"),
            xi_0=d.get("xi_0"),
            zero_indices=tuple(d.get("zero_indices", ())),
        )


def config_to_dict(cfg: FrameConfig) -> dict:
    return {
        "n": cfg.n,
        "n_cp": cfg.n_cp,
        "l_w": cfg.l_w,
        "l_os": cfg.l_os,
        "pinching_enabled": cfg.pinching_enabled,
        "k_set": list(cfg.k_set),
        "oob_indices": list(cfg.oob_indices),
    }


def config_from_dict(d: dict) -> FrameConfig:
    return FrameConfig(
        n=int(d["n"]),
        n_cp=int(d["n_cp"]),
        l_w=int(d["l_w"]),
        l_os=int(d["l_os"]),
        pinching_enabled=bool(d["pinching_enabled"]),
        k_set=tuple(d["k_set"]),
        oob_indices=tuple(d["oob_indices"]),
    )


@dataclass(frozen=True)
class DesignSolution:
    preamble: np.ndarray
    nef: float
    oob_power: float
    total_power: float
    iterations: int
    converged: bool
    kkt_residual: float
    fractional_oob: float
    flags: tuple[str, ...] = ()
    problem: DesignProblem | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "preamble": [float(v) for v in self.preamble],
            "nef": self.nef,
            "oob_power": self.oob_power,
            "total_power": self.total_power,
            "fractional_oob": self.fractional_oob,
            "fractional_oob_db": float(10 * np.log10(self.fractional_oob)) if self.fractional_oob > 0 else None,
            "iterations": self.iterations,
            "converged": self.converged,
            "kkt_residual": self.kkt_residual,
            "flags": list(self.flags),
            "problem": None if self.problem is None else self.problem.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DesignSolution":
        problem = d.get("problem")
        return cls(
            preamble=np.asarray(d["preamble"], dtype=float),
            nef=float(d["nef"]),
            oob_power=float(d["oob_power"]),
            total_power=float(d["total_power"]),
            iterations=int(d["iterations"]),
            converged=bool(d["converged"]),
            kkt_residual=float(d["kkt_residual"]),
            fractional_oob=float(d["fractional_oob"]),
            flags=tuple(d.get("flags", ())),
            problem=None if problem is None else DesignProblem.from_dict(problem),
        )


def nef(p: np.ndarray, k_set: Sequence[int]) -> float:
    """Noise enhancement factor: sum over estimation bins of 1/|P_k|^2."""
    pk = np.asarray(p)[list(k_set)]
    mag2 = np.abs(pk) ** 2
    if np.any(mag2 == 0):
        raise InvalidArgumentError("preamble vanishes on an estimation bin")
    return float(np.sum(1.0 / mag2))


def juxtapose(p_block: np.ndarray, m: int, n_total: int) -> np.ndarray:
    """Cyclic shift-and-sum of a block preamble in steps of ``m`` bins."""
    p_block = np.asarray(p_block)
    if m < 1 or n_total % m:
        raise InvalidArgumentError(f"block spacing {m} must divide {n_total}")
    if p_block.shape != (n_total,):
        raise InvalidArgumentError("block preamble must span the full band")
    return sum(np.roll(p_block, beta * m) for beta in range(n_total // m))


# ---------------------------------------------------------------------------
# smooth pieces, in variables x = P_free / sqrt(t_p)


def _quadratic(q: np.ndarray, bound: float):
    def fn(x):
        qx = q @ x
        return float(x @ qx) - bound, 2.0 * qx, 2.0 * q

    def value(x):
        return float(x @ (q @ x)) - bound

    return fn, value


def _inverse_square(pos: np.ndarray, dim: int, bound: float):
    def fn(x):
        xk = x[pos]
        grad = np.zeros(dim)
        grad[pos] = -2.0 / xk**3
        hess = np.zeros((dim, dim))
        hess[pos, pos] = 6.0 / xk**4
        return float(np.sum(1.0 / xk**2)) - bound, grad, hess

    def value(x):
        xk = x[pos]
        if np.any(xk <= 0):
            return np.inf
        return float(np.sum(1.0 / xk**2)) - bound

    return fn, value


class _Scaled:
    """Problem data restricted to the free variables and normalised by t_p."""

    def __init__(self, problem: DesignProblem, op: SpectrumOperator):
        self.problem = problem
        self.free = problem.free_indices
        self.scale = np.sqrt(problem.t_p)
        where = {int(j): i for i, j in enumerate(self.free)}
        self.pos = np.array([where[k] for k in problem.cfg.k_set])
        self.gram = op.oob_gram(self.free) if problem.cfg.oob_indices else np.zeros((self.free.size,) * 2)
        self.floor = FLOOR_FACTOR / np.sqrt(problem.cfg.n)

    def full(self, x: np.ndarray) -> np.ndarray:
        p = np.zeros(self.problem.cfg.n)
        p[self.free] = x * self.scale
        return p

    def reduce(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(p, dtype=float)[self.free] / self.scale


def find_feasible(problem: DesignProblem, op: SpectrumOperator | None = None) -> np.ndarray:
    """Strictly feasible starting preamble (phase I of the barrier method)."""
    op = op or build_spectrum_operator(problem.cfg)
    sc = _Scaled(problem, op)
    m = len(problem.cfg.k_set)
    t_p = problem.t_p
    if problem.mode is Mode.MIN_OOB:
        best = m * m / t_p  # equipowered at full power
        if not problem.xi_0 > best * (1 + 1e-9):
            raise InfeasibleError(
                f"xi_0={problem.xi_0:g} is not above the smallest NEF {best:g} reachable with power {t_p:g}",
                best,
            )
        power = 0.5 * (m * m / problem.xi_0 + t_p)
        p = np.zeros(problem.cfg.n)
        p[list(problem.cfg.k_set)] = np.sqrt(power / m)
        return p

    # min-nef: least-leaking direction over the mask at half the power budget
    eigval, eigvec = np.linalg.eigh(sc.gram)
    v = eigvec[:, 0]
    if v[sc.pos].sum() < 0:
        v = -v
    if not np.all(v[sc.pos] > 0):
        v = np.zeros(sc.free.size)
        v[sc.pos] = 1.0
    v = v / np.linalg.norm(v) * np.sqrt(0.5)
    oob = float(v @ sc.gram @ v)
    target = problem.epsilon / t_p
    shrink = 1.0 if oob <= 0.5 * target else np.sqrt(0.5 * target / oob)
    x = v * shrink
    if not np.all(x[sc.pos] > 2 * sc.floor):
        floor_oob = t_p * oob * (2 * sc.floor / np.min(v[sc.pos])) ** 2
        raise InfeasibleError(
            f"epsilon={problem.epsilon:g} unreachable: OOB power at the positivity floor is {floor_oob:.3e}"
            f" (least-leaking direction gives {t_p * eigval[0]:.3e} at full power)",
            floor_oob,
        )
    return sc.full(x)


def solve(
    problem: DesignProblem,
    op: SpectrumOperator | None = None,
    start: np.ndarray | None = None,
    rel_gap: float = 1e-10,
) -> DesignSolution:
    op = op or build_spectrum_operator(problem.cfg)
    sc = _Scaled(problem, op)
    p0 = find_feasible(problem, op) if start is None else np.asarray(start, dtype=float)
    x0 = sc.reduce(p0)
    dim = sc.free.size
    power_fn, power_val = _quadratic(np.eye(dim), 1.0)
    constraints = [barrier.Constraint("power", power_fn, power_val, scale=1.0)]
    abs_gap = 0.0
    if problem.mode is Mode.MIN_NEF:
        obj, obj_val = _inverse_square(sc.pos, dim, 0.0)
        oob_fn, oob_val = _quadratic(sc.gram, problem.epsilon / problem.t_p)
        constraints.append(barrier.Constraint("oob", oob_fn, oob_val, scale=problem.epsilon / problem.t_p))
    else:
        obj, obj_val = _quadratic(sc.gram, 0.0)
        bound = problem.xi_0 * problem.t_p
        nef_fn, nef_val = _inverse_square(sc.pos, dim, bound)
        constraints.append(barrier.Constraint("nef", nef_fn, nef_val, scale=bound))
        lam_max = float(np.linalg.eigvalsh(sc.gram)[-1]) if dim else 0.0
        abs_gap = 1e-18 * max(lam_max, 1e-300)
    guard = barrier.BoxGuard(sc.pos, sc.floor)
    try:
        res = barrier.minimize(obj, obj_val, constraints, x0, guard=guard, rel_gap=rel_gap, abs_gap=abs_gap)
    except ConvergenceError as exc:
        raise ConvergenceError(str(exc), sc.full(exc.last_iterate), exc.iterations) from exc
    p = sc.full(res.x)
    if not res.converged:
        raise ConvergenceError("barrier path did not reach the requested duality gap", p, res.newton_steps)

    flags = []
    if problem.mode is Mode.MIN_NEF and not res.active["oob"]:
        flags.append("oob_inactive")
    if not res.active["power"]:
        flags.append("power_inactive")
    if problem.mode is Mode.MIN_OOB and not res.active["nef"]:
        flags.append("nef_inactive")

    oob_power = float(problem.t_p * res.x @ sc.gram @ res.x)
    total = float(p @ p)
    return DesignSolution(
        preamble=p,
        nef=nef(p, problem.cfg.k_set),
        oob_power=oob_power,
        total_power=total,
        iterations=res.newton_steps,
        converged=True,
        kkt_residual=res.kkt_residual,
        fractional_oob=oob_power / total,
        flags=tuple(flags),
        problem=problem,
    )


def objective_value(problem: DesignProblem, p: np.ndarray, op: SpectrumOperator | None = None) -> float:
    """Objective of ``problem`` at an arbitrary preamble (no feasibility check)."""
    if problem.mode is Mode.MIN_NEF:
        return nef(p, problem.cfg.k_set)
    op = op or build_spectrum_operator(problem.cfg)
    return fractional_oob(p, problem.cfg, op) * float(np.vdot(p, p).real)


def is_feasible(problem: DesignProblem, p: np.ndarray, op: SpectrumOperator | None = None, rtol: float = 1e-6) -> bool:
    p = np.asarray(p, dtype=float)
    if p @ p > problem.t_p * (1 + rtol):
        return False
    if np.any(p[list(problem.cfg.k_set)] <= 0):
        return False
    if problem.mask is Mask.EFV:
        outside = np.setdiff1d(np.arange(problem.cfg.n), problem.cfg.k_set)
        if np.any(p[outside] != 0):
            return False
    if np.any(p[list(problem.zero_indices)] != 0):
        return False
    if problem.mode is Mode.MIN_NEF:
        op = op or build_spectrum_operator(problem.cfg)
        sz = op.oob_selector @ p
        return float(np.vdot(sz, sz).real) <= problem.epsilon * (1 + rtol)
    return nef(p, problem.cfg.k_set) <= problem.xi_0 * (1 + rtol)


def comb_design(
    cfg: FrameConfig,
    template: DesignProblem,
    k1: Sequence[int],
    k2: Sequence[int],
) -> tuple[DesignSolution, DesignSolution]:
    """Design one preamble per transmit antenna on interleaved, disjoint combs.

    ``cfg`` supplies the frame and the OOB region shared by both antennas.
    Each antenna's preamble is zero on the other antenna's comb; with the EFV
    mask it is zero everywhere outside its own comb.
    """
    k1, k2 = tuple(int(k) for k in k1), tuple(int(k) for k in k2)
    if not k1 or not k2:
        raise InvalidArgumentError("both combs must be nonempty")
    if set(k1) & set(k2):
        raise InvalidArgumentError("comb index sets overlap")
    out = []
    op_cache: dict = {}
    for mine, other in ((k1, k2), (k2, k1)):
        c = replace(cfg, k_set=mine)
        key = c.oob_indices
        if key not in op_cache:
            op_cache[key] = build_spectrum_operator(c)
        prob = replace(template, cfg=c, zero_indices=other)
        out.append(solve(prob, op_cache[key]))
    return out[0], out[1]


def complexity_probe(
    mask: Mask | str,
    n_values: Sequence[int],
    m: int = 5,
    t_p: float = 100.0,
    epsilon: float = 1.0,
    l_os: int = 4,
    cp_fraction: float = 12 / 160,
) -> list[dict]:
    """Solve times and Newton step counts for growing frame length.

    The estimation block of ``m`` bins sits in the middle of the frame; the
    CP scales with ``n``.  Purely diagnostic.
    """
    mask = Mask(mask)
    rows = []
    for n in n_values:
        start_bin = n // 2 - m // 2
        k_set = tuple(range(start_bin, start_bin + m))
        cfg = FrameConfig.create(n, k_set, n_cp=int(round(cp_fraction * n)), l_os=l_os)
        prob = DesignProblem(Mode.MIN_NEF, t_p, cfg, mask=mask, epsilon=epsilon)
        tic = time.perf_counter()
        sol = solve(prob)
        rows.append(
            {
                "mask": mask.value,
                "n": n,
                "free_variables": int(prob.free_indices.size),
                "newton_steps": sol.iterations,
                "seconds": time.perf_counter() - tic,
                "nef": sol.nef,
            }
        )
    return rows
