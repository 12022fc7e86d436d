"""Command-line entry point: ``qop <subcommand> [--config cfg.json] [--out-dir DIR] ...``.

Exit codes: 0 success, 1 configuration or infeasible split, 2 numerical
failure, 3 a --check (or lemma-check) property failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .harness import bound_sweep, lemma_check, plots, sweep
from .harness.config import MECHANISMS, ConfigError, load_config
from .mechanisms import CalibrationError, PrivacyBudget, calibrate_lop
from .rmt import InfeasibleSplitError
from .solver import SolverDivergence

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3


def _json(obj) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v
    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _apply_overrides(cfg, args):
    sw = cfg.sweep
    if getattr(args, "seed", None) is not None:
        sw.base_seed = args.seed
        cfg.lemma_check.seed = args.seed
    if getattr(args, "mechanisms", None):
        sw.mechanisms = [m.strip() for m in args.mechanisms.split(",") if m.strip()]
    if getattr(args, "kappas", None):
        try:
            sw.kappa_values = [float(k) for k in args.kappas.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --kappas: {exc}") from exc
    if getattr(args, "runs", None) is not None:
        sw.runs_per_point = args.runs
    if getattr(args, "trials", None) is not None:
        cfg.lemma_check.trials = args.trials
    return cfg.validate()


def _report_checks(checks: dict) -> bool:
    for name, c in checks.items():
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {name}: value={c['value']:.6g}")
    return all(c["pass"] for c in checks.values())


# -- subcommands ---------------------------------------------------------------------

def cmd_calibrate(cfg, args) -> int:
    sw = cfg.sweep
    split = sweep.budget_split(sw)
    calib = sweep.qop_calibration(sw)
    clip = calibrate_lop(sw.data.d * sw.data.xi**2, sw.clip, PrivacyBudget(sw.epsilon, sw.delta))
    report = {
        "inputs": {"d": sw.data.d, "m": sw.m, "xi": sw.data.xi, "L": sw.data.d * sw.data.xi**2,
                   "hess_rank": 1, "epsilon": sw.epsilon, "delta": sw.delta,
                   "eps1": split.eps1, "eps2": split.eps2,
                   "deltas": list(split.deltas.as_tuple()), "clip": sw.clip},
        "qop": calib.to_dict(),
        "lop_clip": clip.to_dict(),
    }
    text = _json(report)
    _write(Path(args.out_dir), "calibration.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(cfg, args) -> int:
    sw = cfg.sweep
    out = Path(args.out_dir)
    records = sweep.run_sweep(sw, workers=args.workers)
    summary = sweep.summarize(records)
    _write(out, "runs.csv", sweep.runs_csv(records))
    _write(out, "summary.csv", sweep.summary_csv(summary))
    _write(out, "table_g4.csv", sweep.table_csv(sweep.table_statistics(summary)))
    _write(out, "timings.csv", sweep.timings_csv(sweep.timing_statistics(records)))
    _write(out, "figure2.svg", plots.figure2_svg(summary))
    _write(out, "config.json", cfg.to_json() + "\n")
    failed = sum(r.status != "ok" for r in records)
    print(f"{len(records)} runs ({failed} failed) written to {out}")
    for s in summary:
        print(f"  {s.mechanism:9s} kappa={s.kappa:<10.4g} risk={s.avg_risk:.4g} +/- {s.se_risk:.3g}")
    if args.check:
        return EXIT_OK if _report_checks(sweep.scaling_checks(summary)) else EXIT_CHECK
    return EXIT_OK


def cmd_optimize_bound(cfg, args) -> int:
    bc = cfg.bounds
    out = Path(args.out_dir)
    grids = {}
    for path in bc.paths:
        pts = bound_sweep.run_bound_grid(bc, path)
        grids[path] = pts
        _write(out, f"figure1_{path}.csv", bound_sweep.grid_csv(pts))
        _write(out, f"figure1_{path}.svg", plots.figure1_svg(pts, f"{path} solve"))
        for p in pts:
            print(f"  {path:7s} eps={p.epsilon:<5g} delta={p.delta:<7g} bound={p.bound:.6g}"
                  f"  m={p.m:.3f}  [{p.status}]")
    _write(out, "config.json", cfg.to_json() + "\n")
    if args.check:
        checks = bound_sweep.trend_checks(grids.get("exact"), grids.get("inexact"))
        return EXIT_OK if _report_checks(checks) else EXIT_CHECK
    return EXIT_OK


def cmd_lemma_check(cfg, args) -> int:
    lc = cfg.lemma_check
    report = lemma_check.run_lemma_check(lc.trials, lc.seed, lc.mc_samples)
    _write(Path(args.out_dir), "lemma_check.json", _json(report))
    for name, s in report["suites"].items():
        tag = "PASS" if s["pass"] else "FAIL"
        print(f"[{tag}] {name}: {s['trials'] - s['failures']}/{s['trials']} passed")
        if "first_failure" in s:
            print(f"       first failure at rng key {s['first_failure']['seed']}: "
                  f"{s['first_failure']['detail']}")
        for mg in s.get("margins", []):
            print(f"       delta3={mg['delta3']:<5g} {mg['check']:24s} "
                  f"observed={mg['observed']:.5f} limit={mg['limit']:.5f}")
    return EXIT_OK if report["pass"] else EXIT_CHECK


def cmd_run_single(cfg, args) -> int:
    sw = cfg.sweep
    kappa = float(sw.kappa_values[0]) if args.kappa is None else args.kappa
    mech = sw.mechanisms[0]
    rec = sweep.run_cell(sw, mech, kappa, args.run)
    if rec.status != "ok":
        print(f"{mech} at kappa={kappa}: {rec.status}", file=sys.stderr)
        return EXIT_NUMERIC
    doc = {"mechanism": rec.mechanism, "kappa": rec.kappa, "run": rec.run, "seed": rec.seed,
           "data_hash": rec.data_hash, "empirical_risk": rec.empirical_risk,
           "solver_residual": rec.solver_residual}
    text = _json(doc)
    _write(Path(args.out_dir), "run_single.json", text)
    sys.stdout.write(text)
    print(f"wall time {rec.wall_time_seconds:.4f} s", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "sweep-kappa": cmd_sweep,
    "optimize-bound": cmd_optimize_bound,
    "lemma-check": cmd_lemma_check,
    "run-single": cmd_run_single,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config; flags override its fields")
        p.add_argument("--out-dir", default="results", help="output directory (default: results)")
        p.add_argument("--seed", type=int, help="base seed (sweep) / lemma-check seed")
        p.add_argument("--check", action="store_true", help="exit 3 if the scaling/trend checks fail")
        if name in ("sweep-kappa", "run-single", "calibrate"):
            p.add_argument("--mechanisms", help=f"comma-separated subset of {','.join(MECHANISMS)}")
            p.add_argument("--kappas", help="comma-separated box radii")
            p.add_argument("--runs", type=int, help="runs per kappa")
        if name == "sweep-kappa":
            p.add_argument("--workers", type=int, default=1, help="process pool size")
        if name == "run-single":
            p.add_argument("--kappa", type=float, help="box radius (default: first of --kappas)")
            p.add_argument("--run", type=int, default=0, help="run index (dataset seed offset)")
        if name == "lemma-check":
            p.add_argument("--trials", type=int, help="random instances per suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, InfeasibleSplitError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverDivergence, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
