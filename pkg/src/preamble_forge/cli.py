"""Command-line front end: ``preamble-forge <command> --scenario <path>``.

Exit codes: 0 success, 1 runtime or solver failure, 2 validation failure.
Machine-readable outputs are written (atomically) before the summary is printed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments
from .design_solver import Mask, Mode, complexity_probe, solve
from .errors import ConvergenceError, InfeasibleError, InvalidArgumentError, PreambleForgeError
from .scenario import Scenario, default_scenario_path
from .spectral_ops import to_db

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


# -- output helpers ------------------------------------------------------------


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def write_json(path: Path, obj) -> None:
    write_atomic(path, json.dumps(_json_safe(obj), indent=2) + "\n")


def write_csv(path: Path, rows: list[dict], columns=None) -> None:
    columns = list(columns or rows[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    write_atomic(path, buf.getvalue())


def _gnuplot(csv_name: str, columns: list[str], xlabel: str, ylabel: str, logy: bool) -> str:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logy:
        lines.append("set logscale y")
    plots = [f"'{csv_name}' using 1:{i + 2} with linespoints" for i in range(len(columns) - 1)]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


# -- commands --------------------------------------------------------------------


def cmd_design(scn: Scenario, args, out: Path) -> int:
    pinch = scn.pinching_enabled if args.pinch is None else args.pinch == "on"
    problem = scn.problem(mode=args.mode, mask=args.mask, pinch=pinch, epsilon=args.epsilon, xi_0=args.xi0)
    sol = solve(problem)
    name = f"design_{problem.mode.value}_{problem.mask.value}_pinch-{'on' if pinch else 'off'}.json"
    write_json(out / name, sol.to_dict())
    flags = ",".join(sol.flags) or "-"
    print(
        f"xi={sol.nef:.6g} fractional_oob={to_db(sol.fractional_oob):.2f} dB "
        f"power={sol.total_power:.6g} converged={sol.converged} "
        f"iterations={sol.iterations} kkt={sol.kkt_residual:.1e} flags={flags}"
    )
    return EXIT_OK


def cmd_sweep_mse(scn: Scenario, args, out: Path) -> int:
    rows, summary = experiments.sweep_mse(scn, trials=args.trials)
    cols = ["snr_db", "mse_afv", "mse_efv", "mse_unconstrained",
            "analytic_afv", "analytic_efv", "analytic_unconstrained", "gap_efv_afv_db"]
    write_csv(out / "sweep_mse.csv", rows, cols)
    write_json(out / "sweep_mse.json", {"rows": rows, **summary})
    write_atomic(out / "sweep_mse.gp", _gnuplot("sweep_mse.csv", cols[:4], "SNR (dB)", "MSE", True))
    print(f"EFV-over-AFV SNR gap {summary['analytic_gap_efv_afv_db']:.2f} dB "
          f"({len(rows)} SNR points, {summary['trials']} trials each)")
    return EXIT_OK


def cmd_tradeoff(scn: Scenario, args, out: Path) -> int:
    rows = experiments.tradeoff(scn)
    cols = ["snr_db", "mse_cap", "xi_0", "fractional_oob_db", "nef", "total_power", "status", "flags"]
    write_csv(out / "tradeoff.csv", rows, cols)
    write_atomic(out / "tradeoff.gp", "\n".join([
        "set datafile separator ','",
        "set xlabel 'MSE cap'",
        "set ylabel 'fractional OOB (dB)'",
        "set logscale x",
        "plot for [s in '" + " ".join(f"{v:g}" for v in sorted({r['snr_db'] for r in rows})) + "'] "
        "'tradeoff.csv' using ($1==s+0 ? $2 : 1/0):4 with linespoints title s.' dB'",
    ]) + "\n")
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} trade-off points, {bad} infeasible or not converged")
    return EXIT_OK


def cmd_mimo(scn: Scenario, args, out: Path) -> int:
    res = experiments.mimo(scn)
    write_json(out / "mimo.json", res)
    write_csv(out / "mimo_crlb.csv", res["crlb"])
    print(f"MIMO fractional OOB {res['mimo_fractional_oob_db']:.2f} dB "
          f"(single antenna {res['siso_fractional_oob_db']:.2f} dB), mirror mismatch {res['mirror_error']:.3g}")
    return EXIT_OK


def cmd_table2(scn: Scenario, args, out: Path) -> int:
    rows = experiments.table2(scn)
    write_csv(out / "table2.csv", rows)
    write_json(out / "table2.json", rows)
    print(f"{'':10s}{'AFV':>10s}{'EFV':>10s}{'equipow.':>10s}")
    for r in rows:
        label = "pinch" if r["pinch"] else "no pinch"
        print(f"{label:10s}{r['afv_db']:10.2f}{r['efv_db']:10.2f}{r['equipowered_db']:10.2f}")
    return EXIT_OK


def cmd_complexity(scn: Scenario, args, out: Path) -> int:
    rows = []
    for mask in (Mask.AFV, Mask.EFV):
        rows += complexity_probe(mask, scn.complexity_n, m=len(scn.k_set), t_p=scn.t_p,
                                 epsilon=scn.epsilon if scn.epsilon is not None else 1.0, l_os=scn.l_os)
    write_csv(out / "complexity.csv", rows)
    for r in rows:
        print(f"{r['mask']} n={r['n']} vars={r['free_variables']} steps={r['newton_steps']} {r['seconds']:.3f}s")
    return EXIT_OK


COMMANDS = {
    "design": cmd_design,
    "sweep-mse": cmd_sweep_mse,
    "tradeoff": cmd_tradeoff,
    "mimo": cmd_mimo,
    "table2": cmd_table2,
    "complexity": cmd_complexity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="preamble-forge", description="Preamble design with OOB constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", default=None, help="scenario JSON (default: bundled table1.json)")
        p.add_argument("--out", default=None, help="output directory (overrides the scenario)")
        if name == "design":
            p.add_argument("--mask", choices=[m.value for m in Mask])
            p.add_argument("--mode", choices=[m.value for m in Mode])
            p.add_argument("--pinch", choices=["on", "off"])
            p.add_argument("--epsilon", type=float)
            p.add_argument("--xi0", type=float)
        if name == "sweep-mse":
            p.add_argument("--trials", type=int)
    return parser


def _apply_env(scn: Scenario) -> Scenario:
    seed = os.environ.get("PF_SEED")
    if seed is not None:
        try:
            scn = replace(scn, seed=int(seed))
        except ValueError as exc:
            raise InvalidArgumentError(f"PF_SEED must be an integer, got {seed!r}") from exc
    return scn


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = Scenario.load(args.scenario or default_scenario_path())
        scn = _apply_env(scn)
        out = Path(args.out or scn.output_dir)
        return COMMANDS[args.command](scn, args, out)
    except InvalidArgumentError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except np.linalg.LinAlgError as exc:  # a ValueError subclass, but a numerical failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ConvergenceError as exc:
        print(f"solver did not converge after {exc.iterations} Newton steps: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (PreambleForgeError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
