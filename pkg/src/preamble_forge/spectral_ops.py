"""Linear operators mapping a frequency-domain preamble to its oversampled spectrum.

The chain is ``Z = W_U . U . T . C . W_N^H . P``: inverse unitary DFT to time,
cyclic-prefix insertion, optional pinching (cyclic extension plus raised-cosine
ramps), zero padding to ``u`` samples and a unitary ``u``-point DFT.  All DFTs
are unitary, so power budgets are expressed in that normalization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError


def _as_index_tuple(values, name: str) -> tuple[int, ...]:
    arr = np.asarray(values, dtype=int).ravel()
    out = tuple(int(v) for v in arr)
    if len(set(out)) != len(out):
        raise InvalidArgumentError(f"{name} contains duplicate indices")
    return out


def oob_region(n: int, u: int, band: Sequence[int], guard_bins: float) -> tuple[int, ...]:
    """Oversampled bins whose centre frequency lies outside the guarded band.

    ``band`` is a set of native bins; the protected interval runs from half a
    bin below its lowest member to half a bin above its highest, widened by
    ``guard_bins`` native bins on each side.  Frequencies are circular.
    """
    band = np.asarray(band, dtype=int)
    if band.size == 0:
        raise InvalidArgumentError("band must be nonempty")
    lo = band.min() - guard_bins - 0.5
    hi = band.max() + guard_bins + 0.5
    if hi - lo >= n:
        return ()
    freq = np.arange(u) * (n / u)
    offset = np.mod(freq - lo, n)
    return tuple(int(j) for j in np.flatnonzero(offset > hi - lo + 1e-9))


@dataclass(frozen=True)
class FrameConfig:
    """Structural constants of one preamble frame.

    ``oob_indices`` index the oversampled spectrum of length ``u``.  Use
    :meth:`create` to derive them from a guard band around ``k_set``.
    """

    n: int
    n_cp: int
    l_w: int
    l_os: int
    pinching_enabled: bool
    k_set: tuple[int, ...]
    oob_indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "k_set", _as_index_tuple(self.k_set, "k_set"))
        object.__setattr__(self, "oob_indices", _as_index_tuple(self.oob_indices, "oob_indices"))
        if self.n < 1:
            raise InvalidArgumentError("n must be positive")
        if self.l_os < 1:
            raise InvalidArgumentError("l_os must be >= 1")
        if not 0 <= self.n_cp <= self.n:
            raise InvalidArgumentError("n_cp must satisfy 0 <= n_cp <= n")
        if self.l_w < 0 or (self.pinching_enabled and self.l_w > self.n + self.n_cp):
            raise InvalidArgumentError("l_w must satisfy 0 <= l_w <= n + n_cp")
        if not self.k_set:
            raise InvalidArgumentError("k_set must be nonempty")
        if min(self.k_set) < 0 or max(self.k_set) >= self.n:
            raise InvalidArgumentError("k_set must lie in 0..n-1")
        if self.oob_indices and (min(self.oob_indices) < 0 or max(self.oob_indices) >= self.u):
            raise InvalidArgumentError("oob_indices must lie in 0..u-1")

    @property
    def extended_length(self) -> int:
        pinch = 2 * self.l_w if self.pinching_enabled else 0
        return self.n + self.n_cp + pinch

    @property
    def u(self) -> int:
        return self.l_os * self.extended_length

    @classmethod
    def create(
        cls,
        n: int,
        k_set: Sequence[int],
        n_cp: int = 0,
        l_w: int = 0,
        l_os: int = 1,
        pinching_enabled: bool = False,
        guard_bins: float | None = None,
        band: Sequence[int] | None = None,
    ) -> "FrameConfig":
        """Build a config whose OOB region is everything outside a guarded band.

        ``band`` defaults to ``k_set``; ``guard_bins`` defaults to the width of
        the band in native bins.
        """
        band = list(k_set if band is None else band)
        if not band:
            raise InvalidArgumentError("k_set must be nonempty")
        if guard_bins is None:
            guard_bins = max(band) - min(band) + 1
        ext = n + n_cp + (2 * l_w if pinching_enabled else 0)
        oob = oob_region(n, l_os * ext, band, guard_bins)
        return cls(n, n_cp, l_w, l_os, bool(pinching_enabled), tuple(k_set), oob)

    def with_pinching(self, enabled: bool, guard_bins: float, band: Sequence[int] | None = None) -> "FrameConfig":
        return FrameConfig.create(self.n, self.k_set, self.n_cp, self.l_w, self.l_os, enabled, guard_bins, band)


@dataclass(frozen=True)
class PinchWindow:
    ramp_up: np.ndarray
    ramp_down: np.ndarray

    @classmethod
    def raised_cosine(cls, l_w: int) -> "PinchWindow":
        # w_k = (1 - cos(pi (k+1) / (l_w+1))) / 2, k = 0..l_w-1
        k = np.arange(l_w)
        up = 0.5 * (1.0 - np.cos(np.pi * (k + 1) / (l_w + 1)))
        return cls(up, up[::-1].copy())

    def full(self, body_length: int) -> np.ndarray:
        return np.concatenate([self.ramp_up, np.ones(body_length), self.ramp_down])


def build_dft(n: int) -> np.ndarray:
    """Unitary DFT matrix with entries exp(-2j pi k m / n) / sqrt(n)."""
    if n < 1:
        raise InvalidArgumentError("DFT size must be positive")
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def build_cp_matrix(n: int, n_cp: int) -> np.ndarray:
    if n < 1 or n_cp < 0:
        raise InvalidArgumentError("need n >= 1 and n_cp >= 0")
    if n_cp > n:
        raise InvalidArgumentError(f"CP length {n_cp} exceeds symbol length {n}")
    rows = np.r_[np.arange(n - n_cp, n), np.arange(n)]
    return np.eye(n)[rows]


def build_pinch_extension(n_ext_in: int, l_w: int, window: PinchWindow | None = None, n_cp: int = 0) -> np.ndarray:
    """Pinching prefix/suffix followed by the window multiply, as one matrix.

    The input is a CP-extended symbol of ``n_ext_in`` samples whose first
    ``n_cp`` samples repeat the tail of the core symbol.  The prefix and suffix
    continue the core symbol periodically, so the prefix is the ``l_w`` samples
    preceding the CP and the suffix is the first ``l_w`` core samples.  With
    ``n_cp = 0`` this is a plain cyclic extension of the input.
    """
    if l_w < 0 or n_ext_in < 1:
        raise InvalidArgumentError("need l_w >= 0 and n_ext_in >= 1")
    if l_w > n_ext_in:
        raise InvalidArgumentError(f"pinch length {l_w} exceeds input length {n_ext_in}")
    if not 0 <= n_cp < n_ext_in:
        raise InvalidArgumentError("n_cp must be smaller than the input length")
    window = window or PinchWindow.raised_cosine(l_w)
    core = n_ext_in - n_cp
    # positions in the core symbol, then mapped back to input rows (CP first)
    pre = np.arange(core - n_cp - l_w, core - n_cp) % core
    suf = np.arange(l_w) % core
    rows = np.r_[pre + n_cp, np.arange(n_ext_in), suf + n_cp]
    ext = np.eye(n_ext_in)[rows]
    return window.full(n_ext_in)[:, None] * ext


def _time_matrix(cfg: FrameConfig) -> np.ndarray:
    """Extended time-domain samples as a function of P: T . C . W_N^H."""
    m = build_dft(cfg.n).conj().T
    m = build_cp_matrix(cfg.n, cfg.n_cp) @ m
    if cfg.pinching_enabled and cfg.l_w > 0:
        m = build_pinch_extension(cfg.n + cfg.n_cp, cfg.l_w, n_cp=cfg.n_cp) @ m
    return m


@dataclass(frozen=True)
class SpectrumOperator:
    """Dense ``u x n`` map from preamble to oversampled spectrum."""

    cfg: FrameConfig
    matrix: np.ndarray = field(repr=False)

    @property
    def oob_selector(self) -> np.ndarray:
        return self.matrix[list(self.cfg.oob_indices)]

    def apply(self, p: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(p)

    def oob_gram(self, free: Sequence[int] | None = None) -> np.ndarray:
        """Real quadratic form ``A`` with ``||S Z||^2 = P^T A P`` for real P."""
        s = self.oob_selector
        if free is not None:
            s = s[:, list(free)]
        g = s.conj().T @ s
        g = g.real
        return 0.5 * (g + g.T)


def build_spectrum_operator(cfg: FrameConfig) -> SpectrumOperator:
    tm = _time_matrix(cfg)
    padded = np.zeros((cfg.u, cfg.n), dtype=complex)
    padded[: tm.shape[0]] = tm
    # columnwise unitary u-point DFT; equal to build_dft(u) @ padded
    matrix = np.fft.fft(padded, axis=0, norm="ortho")
    matrix.setflags(write=False)
    return SpectrumOperator(cfg, matrix)


def fractional_oob(p: np.ndarray, cfg: FrameConfig, op: SpectrumOperator | None = None) -> float:
    """Ratio of OOB energy ``||S Z||^2`` to preamble energy ``||P||^2``."""
    p = np.asarray(p)
    energy = float(np.vdot(p, p).real)
    if energy <= 0.0:
        raise InvalidArgumentError("fractional OOB undefined for an all-zero preamble")
    op = op or build_spectrum_operator(cfg)
    sz = op.oob_selector @ p
    return float(np.vdot(sz, sz).real) / energy


def to_db(ratio: float) -> float:
    return float(10.0 * np.log10(ratio)) if ratio > 0 else float("-inf")
