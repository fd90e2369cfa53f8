"""Scenario files: one JSON document describing a frame, a design and the sweeps."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .design_solver import DesignProblem, Mask, Mode
from .errors import InvalidArgumentError
from .spectral_ops import FrameConfig

_SCHEMA = {
    "frame": {"n", "n_cp", "l_w", "l_os", "k_set", "guard_bins", "pinching_enabled"},
    "problem": {"mode", "mask", "t_p", "epsilon", "xi_0", "mse_cap", "mse_cap_snr_db"},
    "channel": {"l_c", "taps", "decay"},
    "estimation": {"n_g", "k_total", "m", "k1", "k2"},
    "sweep": {"snr_db", "trials", "mse_caps", "tradeoff_snr_db", "seed", "complexity_n"},
    "outputs": {"directory"},
}
_REQUIRED = {
    "frame": {"n", "k_set"},
    "problem": {"t_p"},
}


def _check_keys(raw: dict, where: str, allowed: set, required: set = frozenset()):
    if not isinstance(raw, dict):
        raise InvalidArgumentError(f"{where}: expected an object")
    unknown = set(raw) - allowed
    if unknown:
        raise InvalidArgumentError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = set(required) - set(raw)
    if missing:
        raise InvalidArgumentError(f"{where}: missing field(s) {sorted(missing)}")


def _int_list(values, where: str) -> tuple[int, ...]:
    if not isinstance(values, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        raise InvalidArgumentError(f"{where}: expected a list of integers")
    return tuple(values)


@dataclass(frozen=True)
class Scenario:
    n: int
    k_set: tuple[int, ...]
    t_p: float
    n_cp: int = 0
    l_w: int = 0
    l_os: int = 1
    guard_bins: float | None = None
    pinching_enabled: bool = False
    mode: Mode = Mode.MIN_OOB
    mask: Mask = Mask.AFV
    epsilon: float | None = None
    xi_0: float | None = None
    mse_cap: float | None = None
    mse_cap_snr_db: float | None = None
    l_c: int = 10
    channel_taps: int = 11
    decay: float = 0.15
    n_g: int | None = None
    k_total: int | None = None
    m: int | None = None
    k1: tuple[int, ...] = ()
    k2: tuple[int, ...] = ()
    snr_db: tuple[float, ...] = (0.0, 6.0, 12.0, 18.0, 24.0, 30.0)
    trials: int = 1000
    mse_caps: tuple[float, ...] = ()
    tradeoff_snr_db: tuple[float, ...] = ()
    seed: int = 0
    complexity_n: tuple[int, ...] = (40, 80, 160)
    output_dir: str = "out"
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.k_set:
            raise InvalidArgumentError("frame.k_set must be nonempty")
        if self.trials < 1:
            raise InvalidArgumentError("sweep.trials must be >= 1")
        if (self.mse_cap is None) != (self.mse_cap_snr_db is None):
            raise InvalidArgumentError("problem.mse_cap and problem.mse_cap_snr_db go together")
        if self.xi_0 is not None and self.mse_cap is not None:
            raise InvalidArgumentError("give either problem.xi_0 or problem.mse_cap, not both")
        if self.mse_cap is not None and self.mse_cap <= 0:
            raise InvalidArgumentError("problem.mse_cap must be positive")
        if any(c <= 0 for c in self.mse_caps):
            raise InvalidArgumentError("sweep.mse_caps must be positive")
        if set(self.k1) & set(self.k2):
            raise InvalidArgumentError("estimation.k1 and estimation.k2 overlap")
        if self.m is not None and (self.m < 1 or self.n % self.m):
            raise InvalidArgumentError("estimation.m must divide frame.n")
        if not 1 <= self.l_c <= self.n or self.channel_taps < 1:
            raise InvalidArgumentError("channel lengths must be positive and at most n")
        # build once so every frame invariant is checked up front
        self.frame()
        self.frame(pinch=not self.pinching_enabled)

    # -- derived objects ------------------------------------------------------

    def frame(self, pinch: bool | None = None, k_set=None) -> FrameConfig:
        pinch = self.pinching_enabled if pinch is None else pinch
        return FrameConfig.create(
            self.n,
            self.k_set if k_set is None else k_set,
            n_cp=self.n_cp,
            l_w=self.l_w,
            l_os=self.l_os,
            pinching_enabled=pinch,
            guard_bins=self.guard_bins,
        )

    def sigma2(self, snr_db: float, power: float | None = None) -> float:
        """Noise variance at ``snr_db`` for a preamble of the given total power."""
        power = self.t_p if power is None else power
        return power / (self.n * 10.0 ** (snr_db / 10.0))

    def xi_for_cap(self, cap: float, snr_db: float) -> float:
        """NEF bound that keeps the ZF MSE at or below ``cap`` at full power."""
        return cap / self.sigma2(snr_db)

    def resolved_xi_0(self) -> float | None:
        if self.xi_0 is not None:
            return self.xi_0
        if self.mse_cap is not None:
            return self.xi_for_cap(self.mse_cap, self.mse_cap_snr_db)
        return None

    def problem(self, mode=None, mask=None, pinch: bool | None = None, epsilon=None, xi_0=None) -> DesignProblem:
        mode = Mode(mode or self.mode)
        mask = Mask(mask or self.mask)
        eps = self.epsilon if epsilon is None else epsilon
        xi = self.resolved_xi_0() if xi_0 is None else xi_0
        if mode is Mode.MIN_NEF and eps is None:
            raise InvalidArgumentError("min-nef needs problem.epsilon")
        if mode is Mode.MIN_OOB and xi is None:
            raise InvalidArgumentError("min-oob needs problem.xi_0 or problem.mse_cap")
        return DesignProblem(
            mode, self.t_p, self.frame(pinch), mask=mask,
            epsilon=eps if mode is Mode.MIN_NEF else None,
            xi_0=xi if mode is Mode.MIN_OOB else None,
        )

    @property
    def block_spacing(self) -> int:
        if self.m is not None:
            return self.m
        return len(self.k_set)

    # -- io --------------------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        _check_keys(raw, "scenario", set(_SCHEMA))
        for section in _SCHEMA:
            _check_keys(raw.get(section, {}), section, _SCHEMA[section], _REQUIRED.get(section, set()))
        if "frame" not in raw or "problem" not in raw:
            raise InvalidArgumentError("scenario needs 'frame' and 'problem' sections")
        fr, pr = raw["frame"], raw["problem"]
        ch, es = raw.get("channel", {}), raw.get("estimation", {})
        sw, out = raw.get("sweep", {}), raw.get("outputs", {})
        kw = dict(
            n=fr["n"],
            k_set=_int_list(fr["k_set"], "frame.k_set"),
            t_p=float(pr["t_p"]),
            n_cp=fr.get("n_cp", 0),
            l_w=fr.get("l_w", 0),
            l_os=fr.get("l_os", 1),
            guard_bins=fr.get("guard_bins"),
            pinching_enabled=bool(fr.get("pinching_enabled", False)),
            mode=Mode(pr.get("mode", "min-oob")),
            mask=Mask(pr.get("mask", "afv")),
            epsilon=pr.get("epsilon"),
            xi_0=pr.get("xi_0"),
            mse_cap=pr.get("mse_cap"),
            mse_cap_snr_db=pr.get("mse_cap_snr_db"),
            l_c=ch.get("l_c", 10),
            channel_taps=ch.get("taps", 11),
            decay=float(ch.get("decay", 0.15)),
            n_g=es.get("n_g"),
            k_total=es.get("k_total"),
            m=es.get("m"),
            k1=_int_list(es.get("k1", []), "estimation.k1"),
            k2=_int_list(es.get("k2", []), "estimation.k2"),
            snr_db=tuple(float(s) for s in sw.get("snr_db", cls.snr_db)),
            trials=int(sw.get("trials", 1000)),
            mse_caps=tuple(float(c) for c in sw.get("mse_caps", ())),
            tradeoff_snr_db=tuple(float(s) for s in sw.get("tradeoff_snr_db", ())),
            seed=int(sw.get("seed", 0)),
            complexity_n=tuple(int(v) for v in sw.get("complexity_n", cls.complexity_n)),
            output_dir=str(out.get("directory", "out")),
        )
        for name in ("n", "n_cp", "l_w", "l_os", "l_c", "channel_taps"):
            if not isinstance(kw[name], int) or isinstance(kw[name], bool):
                raise InvalidArgumentError(f"{name} must be an integer")
        try:
            return cls(**kw, raw=raw)
        except ValueError as exc:
            if isinstance(exc, InvalidArgumentError):
                raise
            raise InvalidArgumentError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Scenario":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgumentError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_dict(raw)


def default_scenario_path() -> Path:
    return Path(str(resources.files("preamble_forge") / "scenarios" / "table1.json"))


def load_default() -> Scenario:
    return Scenario.load(default_scenario_path())


def equipowered(n: int, k_set, t_p: float) -> np.ndarray:
    """Equal magnitudes on ``k_set`` at total power ``t_p``; zero elsewhere."""
    p = np.zeros(n)
    k = list(k_set)
    p[k] = np.sqrt(t_p / len(k))
    return p
