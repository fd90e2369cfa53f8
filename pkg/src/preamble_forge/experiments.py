"""Scenario-level experiments: fractional-OOB tables, MSE sweeps, trade-off curves, comb designs."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .channel_sim import monte_carlo
from .design_solver import Mask, Mode, comb_design, juxtapose, nef, solve
from .errors import ConvergenceError, InfeasibleError, InvalidArgumentError
from .estimation import Estimator, crlb_mimo
from .scenario import Scenario, equipowered
from .spectral_ops import build_spectrum_operator, fractional_oob, to_db


def table2(scn: Scenario) -> list[dict]:
    """Fractional OOB (dB) of AFV, EFV and the equipowered baseline, pinching off and on."""
    rows = []
    for pinch in (False, True):
        cfg = scn.frame(pinch)
        op = build_spectrum_operator(cfg)
        row = {"pinch": pinch}
        for mask in (Mask.AFV, Mask.EFV):
            sol = solve(scn.problem(mask=mask, pinch=pinch), op)
            row[f"{mask.value}_db"] = to_db(sol.fractional_oob)
            row[f"{mask.value}_nef"] = sol.nef
            row[f"{mask.value}_power"] = sol.total_power
        eq = equipowered(scn.n, scn.k_set, scn.t_p)
        row["equipowered_db"] = to_db(fractional_oob(eq, cfg, op))
        rows.append(row)
    return rows


def full_band(p_block: np.ndarray, m: int, t_p: float) -> np.ndarray:
    """Juxtapose a block design over the whole band and rescale it to power ``t_p``."""
    p = juxtapose(p_block, m, p_block.size)
    return p * np.sqrt(t_p / float(p @ p))


def snr_gap_db(p_a: np.ndarray, p_b: np.ndarray) -> float:
    """Extra SNR (dB) that ``p_a`` needs over ``p_b`` for equal full-band ZF MSE.

    With SNR = ||P||^2 / (n sigma2) the MSE is ``||P||^2 xi / (n SNR)``, so
    the gap is the ratio of ``||P||^2 xi`` and does not depend on the SNR.
    """
    k = range(p_a.size)
    return to_db(float(p_a @ p_a) * nef(p_a, k) / (float(p_b @ p_b) * nef(p_b, k)))


def full_band_designs(scn: Scenario, pinch: bool | None = None) -> dict[str, np.ndarray]:
    m = scn.block_spacing
    out = {}
    for mask in (Mask.AFV, Mask.EFV):
        sol = solve(scn.problem(mask=mask, pinch=pinch))
        out[mask.value] = full_band(sol.preamble, m, scn.t_p)
    out["unconstrained"] = np.full(scn.n, np.sqrt(scn.t_p / scn.n))
    return out


def sweep_mse(scn: Scenario, trials: int | None = None, seed: int | None = None) -> tuple[list[dict], dict]:
    """Full-band ZF MSE versus SNR for juxtaposed AFV/EFV designs and the unconstrained one."""
    designs = full_band_designs(scn)
    trials = scn.trials if trials is None else trials
    seed = scn.seed if seed is None else seed
    reports = {
        name: monte_carlo(p, scn.snr_db, trials, Estimator.ZF, seed=seed, k_set=range(scn.n))
        for name, p in designs.items()
    }
    rows = []
    for i, snr in enumerate(scn.snr_db):
        row = {"snr_db": snr}
        for name, rep in reports.items():
            row[f"mse_{name}"] = rep.empirical_mse[i]
        for name, rep in reports.items():
            row[f"analytic_{name}"] = rep.analytic_mse[i]
        row["gap_efv_afv_db"] = to_db(row["mse_afv"] / row["mse_efv"])
        rows.append(row)
    summary = {
        "analytic_gap_efv_afv_db": snr_gap_db(designs["afv"], designs["efv"]),
        "trials": trials,
        "seed": seed,
        "preambles": {k: [float(v) for v in p] for k, p in designs.items()},
        "standard_errors": {k: r.empirical_se for k, r in reports.items()},
        "channel": reports["afv"].metadata["channel"],
        "snr_definition": reports["afv"].metadata["snr_definition"],
    }
    return rows, summary


def tradeoff(scn: Scenario) -> list[dict]:
    """Fractional OOB of min-OOB designs as the MSE cap grows, per SNR.

    Each cap is converted to a NEF bound at the row's SNR.  Infeasible or
    non-converged points are kept and flagged.
    """
    cfg = scn.frame()
    op = build_spectrum_operator(cfg)
    rows = []
    for snr in scn.tradeoff_snr_db or (scn.mse_cap_snr_db or 24.0,):
        for cap in scn.mse_caps:
            xi = scn.xi_for_cap(cap, snr)
            row = {"snr_db": snr, "mse_cap": cap, "xi_0": xi}
            try:
                sol = solve(scn.problem(mode=Mode.MIN_OOB, xi_0=xi), op)
            except InfeasibleError as exc:
                row.update(fractional_oob_db=float("nan"), nef=float("nan"), total_power=float("nan"),
                           status="infeasible", flags=str(exc.certificate))
            except ConvergenceError:
                row.update(fractional_oob_db=float("nan"), nef=float("nan"), total_power=float("nan"),
                           status="not_converged", flags="")
            else:
                row.update(fractional_oob_db=to_db(sol.fractional_oob), nef=sol.nef,
                           total_power=sol.total_power, status="ok", flags=";".join(sol.flags))
            rows.append(row)
    return rows


def mirror_error(p1: np.ndarray, p2: np.ndarray, k1, k2) -> float:
    """Relative mismatch between ``p2`` and ``p1`` reflected about the centre of the two combs."""
    centre2 = min(min(k1), min(k2)) + max(max(k1), max(k2))
    idx = (centre2 - np.arange(p1.size)) % p1.size
    return float(np.linalg.norm(p2 - p1[idx]) / np.linalg.norm(p1))


def mimo(scn: Scenario) -> dict:
    """Two-antenna comb design, per-antenna CRLBs, and the single-antenna design of the scenario for reference."""
    if not scn.k1 or not scn.k2:
        raise InvalidArgumentError("estimation.k1 and estimation.k2 are required for the MIMO design")
    union = sorted(set(scn.k1) | set(scn.k2))
    cfg = scn.frame(k_set=union)
    template = replace(scn.problem(), cfg=cfg)
    s1, s2 = comb_design(cfg, template, scn.k1, scn.k2)
    siso = solve(scn.problem())
    p1, p2 = s1.preamble, s2.preamble
    oob_total = (s1.oob_power + s2.oob_power) / (s1.total_power + s2.total_power)
    crlb_rows = []
    for snr in scn.snr_db:
        sigma2 = scn.sigma2(snr)
        crlb_rows.append({
            "snr_db": snr,
            "crlb_h1": crlb_mimo(p1, sigma2, scn.k1),
            "crlb_h2": crlb_mimo(p2, sigma2, scn.k2),
        })
    return {
        "antenna1": s1.to_dict(),
        "antenna2": s2.to_dict(),
        "mirror_error": mirror_error(p1, p2, scn.k1, scn.k2),
        "mimo_fractional_oob_db": to_db(oob_total),
        "siso_fractional_oob_db": to_db(siso.fractional_oob),
        "crlb": crlb_rows,
    }

