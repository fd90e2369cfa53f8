"""Multipath channels, preamble transmission and Monte-Carlo MSE sweeps.

Taps are Rayleigh with an exponential power-delay envelope normalised to unit
total power.  Frequency responses use the unnormalised DFT of the taps
(``sqrt(n)`` times the unitary one), so that circular convolution in time is
an elementwise product with the unitary-DFT spectra.

Random streams: every trial draws from its own generator, keyed by
``(master seed, snr index, trial index)`` through numpy's ``SeedSequence``
spawn keys.  Results therefore do not depend on evaluation order.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .design_solver import DesignSolution, nef
from .errors import InvalidArgumentError, ModelMismatchWarning
from .estimation import (
    Estimator,
    EstimationReport,
    ToneGrid,
    interpolate_full,
    ls_time_estimate,
    mmse_estimate,
    zf_estimate,
)


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def complex_normal(rng: np.random.Generator, size, var: float = 1.0) -> np.ndarray:
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def pdp_envelope(l_c: int, decay: float, normalize: bool = True) -> np.ndarray:
    """Tap amplitude envelope ``exp(-decay t)``, t = 0..l_c-1."""
    if l_c < 1:
        raise InvalidArgumentError("need at least one tap")
    env = np.exp(-decay * np.arange(l_c))
    if normalize:
        env = env / np.sqrt(np.sum(env**2))
    return env


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray
    seed: int | None = None
    envelope: np.ndarray | None = field(default=None, repr=False)

    def freq_response(self, n: int) -> np.ndarray:
        if self.taps.size > n:
            raise InvalidArgumentError("channel longer than the DFT size")
        return np.fft.fft(self.taps, n=n)


def gen_channel(l_c: int, decay: float, seed: int | None = None, rng: np.random.Generator | None = None) -> ChannelRealization:
    env = pdp_envelope(l_c, decay)
    rng = rng if rng is not None else np.random.default_rng(seed)
    taps = env * complex_normal(rng, l_c)
    return ChannelRealization(taps, seed, env)


def gen_identity_prior_channel(l_c: int, n: int, rng: np.random.Generator) -> ChannelRealization:
    """Taps whose partial-DFT coordinates ``sqrt(n) h`` are i.i.d. CN(0, 1)."""
    return ChannelRealization(complex_normal(rng, l_c, 1.0 / n))


def transmit(p: np.ndarray, ch: ChannelRealization, sigma2: float, seed: int | None = None,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Received spectrum ``Y = H P + N`` with per-bin noise variance ``sigma2``."""
    p = np.asarray(p)
    rng = rng if rng is not None else np.random.default_rng(seed)
    y = ch.freq_response(p.size) * p
    if sigma2 > 0:
        y = y + complex_normal(rng, p.size, sigma2)
    return y


def transmit_time(p: np.ndarray, ch: ChannelRealization, sigma2: float, n_cp: int,
                  seed: int | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Explicit path: IDFT, CP, linear convolution, AWGN in time, CP removal, DFT."""
    p = np.asarray(p)
    n = p.size
    if n_cp < ch.taps.size - 1:
        warnings.warn(
            f"CP of {n_cp} samples is shorter than the channel memory {ch.taps.size - 1}; "
            "received samples carry inter-symbol interference",
            ModelMismatchWarning,
            stacklevel=2,
        )
    x = np.fft.ifft(p, norm="ortho")
    tx = np.concatenate([x[n - n_cp:], x])
    rx = np.convolve(tx, ch.taps)[: n + n_cp]
    rng = rng if rng is not None else np.random.default_rng(seed)
    if sigma2 > 0:
        rx = rx + complex_normal(rng, rx.size, sigma2)
    return np.fft.fft(rx[n_cp:], norm="ortho")


@dataclass(frozen=True)
class MimoObservation:
    y: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    comb1: tuple[int, ...]
    comb2: tuple[int, ...]


def mimo_transmit(p1, p2, ch1: ChannelRealization, ch2: ChannelRealization, sigma2: float,
                  seed: int | None = None, rng: np.random.Generator | None = None,
                  comb1: Sequence[int] | None = None, comb2: Sequence[int] | None = None) -> MimoObservation:
    """Two transmit antennas, one receive antenna: ``Y = H1 P1 + H2 P2 + N``.

    The combs default to the supports of the preambles and must be disjoint.
    """
    p1, p2 = np.asarray(p1), np.asarray(p2)
    if p1.shape != p2.shape:
        raise InvalidArgumentError("preambles must have equal length")
    c1 = tuple(np.flatnonzero(p1)) if comb1 is None else tuple(comb1)
    c2 = tuple(np.flatnonzero(p2)) if comb2 is None else tuple(comb2)
    if set(c1) & set(c2) or np.any(p1[list(c2)] != 0) or np.any(p2[list(c1)] != 0):
        raise InvalidArgumentError("antenna combs overlap")
    n = p1.size
    h1, h2 = ch1.freq_response(n), ch2.freq_response(n)
    rng = rng if rng is not None else np.random.default_rng(seed)
    noise = complex_normal(rng, n, sigma2) if sigma2 > 0 else np.zeros(n, complex)
    return MimoObservation(h1 * p1 + h2 * p2 + noise, h1, h2, tuple(int(k) for k in c1), tuple(int(k) for k in c2))


def sigma2_for_snr(p: np.ndarray, snr_db: float) -> float:
    """Noise variance for SNR = ||P||^2 / (n sigma2)."""
    p = np.asarray(p)
    return float(np.vdot(p, p).real) / (p.size * 10.0 ** (snr_db / 10.0))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PF_THREADS", "1")))
    except ValueError:
        return 1


def monte_carlo(
    design,
    snr_list: Sequence[float],
    trials: int,
    estimator: Estimator | str = Estimator.ZF,
    seed: int = 0,
    k_set: Sequence[int] | None = None,
    channel_taps: int = 11,
    decay: float = 0.15,
    grid: ToneGrid | None = None,
    prior: str = "pdp",
    threads: int | None = None,
) -> EstimationReport:
    """MSE of an estimator for one preamble over random channels and noise.

    ``design`` is a :class:`DesignSolution` or a raw preamble.  ZF error is
    summed over ``k_set``; LS/MMSE error is summed over all ``n_g`` bins of the
    interpolated response, on the tones of ``grid``.  ``prior="identity"``
    draws channels matching the MMSE prior instead of the exponential PDP.
    """
    estimator = Estimator(estimator)
    if trials < 1:
        raise InvalidArgumentError("need at least one trial")
    if isinstance(design, DesignSolution):
        p = design.preamble
        if k_set is None and design.problem is not None:
            k_set = design.problem.cfg.k_set
    else:
        p = np.asarray(design)
    if estimator is Estimator.ZF:
        if k_set is None:
            k_set = tuple(np.flatnonzero(p))
        k_set = tuple(int(k) for k in k_set)
        tones = k_set
    else:
        if grid is None:
            raise InvalidArgumentError("LS/MMSE estimation needs a ToneGrid")
        tones = grid.k_prime
    n = p.size
    xi = nef(p, tones)

    def one_snr(i_snr: int):
        snr = snr_list[i_snr]
        sigma2 = sigma2_for_snr(p, snr)
        y = np.empty((trials, n), complex)
        h = np.empty((trials, n), complex)
        # draws stay per trial (own substream); the estimators run batched
        for t in range(trials):
            rng = trial_rng(seed, i_snr, t)
            if prior == "identity":
                ch = gen_identity_prior_channel(grid.l_c if grid else channel_taps, n, rng)
            else:
                ch = gen_channel(channel_taps, decay, rng=rng)
            y[t] = transmit(p, ch, sigma2, rng=rng)
            h[t] = ch.freq_response(n)
        h_tones = zf_estimate(y, p, tones)
        if estimator is Estimator.ZF:
            return sigma2, np.sum(np.abs(h_tones - h[:, list(tones)]) ** 2, axis=1)
        if estimator is Estimator.LS:
            g = ls_time_estimate(h_tones, grid)
        else:
            g = mmse_estimate(h_tones, p[list(tones)], sigma2, grid)
        h_full = interpolate_full(g, grid.n_g)
        return sigma2, np.sum(np.abs(h_full - h[:, : grid.n_g]) ** 2, axis=1)

    workers = threads or _threads()
    idx = range(len(snr_list))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one_snr, idx))
    else:
        results = [one_snr(i) for i in idx]

    emp, se, analytic = [], [], []
    for sigma2, errs in results:
        emp.append(float(np.mean(errs)))
        se.append(float(np.std(errs, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0)
        analytic.append(sigma2 * xi)
    return EstimationReport(
        estimator=estimator,
        snr_db=[float(s) for s in snr_list],
        empirical_mse=emp,
        empirical_se=se,
        analytic_mse=analytic,
        crlb=list(analytic),
        trials=trials,
        metadata={
            "seed": seed,
            "snr_definition": "||P||^2 / (n sigma2)",
            "channel": {"prior": prior, "taps": channel_taps, "decay": decay, "pdp_normalization": "sum envelope^2 = 1"},
        },
    )
