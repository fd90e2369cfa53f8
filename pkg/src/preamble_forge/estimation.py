"""Channel estimators and their Cramer-Rao bounds.

Per-bin zero forcing divides the received spectrum by the preamble.  For
isolated tones, the zero-forcing values are fitted by a short impulse
response (least squares through a partial DFT, or the linear MMSE fit under
an identity prior) and interpolated back to full resolution.

Tap vectors live in the partial-DFT normalisation: the tone model is
``H[K'] = F_T g`` with ``F_T`` the unitary-DFT rows, so ``g = sqrt(n_g) h``
for ordinary taps ``h``, and ``interpolate_full`` returns ``W_{n_g} g``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .design_solver import nef
from .errors import InvalidArgumentError, RankDeficientError, SingularMatrixError
from .spectral_ops import build_dft

RANK_RTOL = 1e-10


class Estimator(str, enum.Enum):
    ZF = "zf"
    LS = "ls"
    MMSE = "mmse"


@dataclass(frozen=True)
class ToneGrid:
    k_prime: tuple[int, ...]
    l_c: int
    n_g: int
    f_t: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, k_prime: Sequence[int], l_c: int, n_g: int) -> "ToneGrid":
        k_prime = tuple(int(k) for k in k_prime)
        if not k_prime or len(set(k_prime)) != len(k_prime):
            raise InvalidArgumentError("k_prime must be nonempty and duplicate-free")
        if min(k_prime) < 0 or max(k_prime) >= n_g:
            raise InvalidArgumentError("k_prime must lie in 0..n_g-1")
        if not 1 <= l_c <= n_g:
            raise InvalidArgumentError("need 1 <= l_c <= n_g")
        k = np.asarray(k_prime)[:, None]
        t = np.arange(l_c)[None, :]
        f_t = np.exp(-2j * np.pi * k * t / n_g) / np.sqrt(n_g)
        f_t.setflags(write=False)
        return cls(k_prime, l_c, n_g, f_t)

    @property
    def well_posed(self) -> bool:
        return len(self.k_prime) >= self.l_c


def zf_estimate(y: np.ndarray, p: np.ndarray, k_set: Sequence[int]) -> np.ndarray:
    """Per-bin zero forcing ``Y_k / P_k`` on ``k_set``.

    Equal to ``Y_k P_k^* / |P_k|^2``; dividing directly avoids a spurious
    conjugate on complex preambles.
    """
    idx = list(k_set)
    pk = np.asarray(p)[idx]
    if np.any(pk == 0):
        raise InvalidArgumentError("preamble vanishes on an estimation bin")
    return np.asarray(y)[..., idx] / pk


def ls_time_estimate(h_hat_tones: np.ndarray, grid: ToneGrid) -> np.ndarray:
    """Least-squares taps ``F_T^+ H`` via pivoted QR.

    ``h_hat_tones`` may carry leading batch dimensions.
    """
    q, r, perm = scipy.linalg.qr(grid.f_t, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_RTOL * diag[0])) if diag.size else 0
    if rank < grid.l_c:
        raise RankDeficientError(f"partial DFT has rank {rank} < {grid.l_c} taps")
    rhs = np.asarray(h_hat_tones) @ q.conj()  # (..., l_c) = (Q^H H)^T
    z = scipy.linalg.solve_triangular(r, rhs.T, lower=False).T
    out = np.empty_like(z)
    out[..., perm] = z
    return out


def mmse_estimate(h_l_tones: np.ndarray, p_tones: np.ndarray, sigma2: float, grid: ToneGrid) -> np.ndarray:
    """Linear MMSE taps under an identity prior ``E[g g^H] = I``.

    ``g = F_T^H (F_T F_T^H + diag(sigma2 / |P_k|^2))^{-1} H_L`` where ``H_L``
    holds the zero-forcing values on the tones.
    """
    p_tones = np.asarray(p_tones)
    if p_tones.shape != (len(grid.k_prime),):
        raise InvalidArgumentError("need one preamble value per tone")
    if np.any(p_tones == 0):
        raise InvalidArgumentError("preamble vanishes on a tone")
    if sigma2 < 0:
        raise InvalidArgumentError("sigma2 must be nonnegative")
    f = grid.f_t
    c = f @ f.conj().T + np.diag(sigma2 / np.abs(p_tones) ** 2)
    try:
        lu = scipy.linalg.lu_factor(c, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover - lu_factor warns instead
        raise SingularMatrixError(str(exc)) from exc
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-12 * np.max(np.abs(np.diag(lu[0]))):
        raise SingularMatrixError("tone covariance is singular (noise-free and rank deficient)")
    w = scipy.linalg.lu_solve(lu, np.asarray(h_l_tones).T).T
    return w @ f.conj()


def interpolate_full(h_hat: np.ndarray, n_g: int) -> np.ndarray:
    """Zero-pad taps to ``n_g`` and apply the unitary ``n_g``-point DFT."""
    h_hat = np.asarray(h_hat)
    if h_hat.shape[-1] > n_g:
        raise InvalidArgumentError("more taps than DFT points")
    return np.fft.fft(h_hat, n=n_g, axis=-1, norm="ortho")


def crlb_siso(p: np.ndarray, k_set: Sequence[int], sigma2: float) -> float:
    return float(sigma2) * nef(p, k_set)


def crlb_mimo(p_i: np.ndarray, sigma2: float, comb: Sequence[int] | None = None) -> float:
    """Bound for the channel of one antenna: ``sigma2 * trace(E_Pi^{-1})`` on its comb.

    ``comb`` defaults to the nonzero bins of ``p_i``.
    """
    p_i = np.asarray(p_i)
    if comb is None:
        comb = np.flatnonzero(p_i)
        if comb.size == 0:
            raise InvalidArgumentError("preamble is identically zero")
    return crlb_siso(p_i, comb, sigma2)


def dft_matrix_rows(k_prime: Sequence[int], l_c: int, n_g: int) -> np.ndarray:
    """Reference partial DFT cut from the full matrix (used to cross-check ToneGrid)."""
    return build_dft(n_g)[np.ix_(list(k_prime), np.arange(l_c))]


@dataclass
class EstimationReport:
    estimator: Estimator
    snr_db: list[float]
    empirical_mse: list[float]
    empirical_se: list[float]
    analytic_mse: list[float]
    crlb: list[float]
    trials: int
    metadata: dict = field(default_factory=dict)

    CSV_COLUMNS = ("snr_db", "empirical_mse", "analytic_mse", "crlb", "trials")

    def rows(self):
        for i, s in enumerate(self.snr_db):
            yield {
                "snr_db": s,
                "empirical_mse": self.empirical_mse[i],
                "analytic_mse": self.analytic_mse[i],
                "crlb": self.crlb[i],
                "trials": self.trials,
            }

    def to_dict(self) -> dict:
        return {
            "estimator": Estimator(self.estimator).value,
            "snr_db": list(self.snr_db),
            "empirical_mse": list(self.empirical_mse),
            "empirical_se": list(self.empirical_se),
            "analytic_mse": list(self.analytic_mse),
            "crlb": list(self.crlb),
            "trials": self.trials,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationReport":
        return cls(
            estimator=Estimator(d["estimator"]),
            snr_db=list(d["snr_db"]),
            empirical_mse=list(d["empirical_mse"]),
            empirical_se=list(d.get("empirical_se", [])),
            analytic_mse=list(d["analytic_mse"]),
            crlb=list(d["crlb"]),
            trials=int(d["trials"]),
            metadata=dict(d.get("metadata", {})),
        )
