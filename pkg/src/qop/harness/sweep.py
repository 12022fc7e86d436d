"""Box-radius sweep comparing QOP, LOP and LOP-Clip on interpolating LASSO data.

Run r uses the dataset drawn with seed base_seed + r for every mechanism and
kappa (paired design). Mechanism noise and solver indices use a per-cell seed
base_seed ^ crc32("mech|kappa|run").
"""
from __future__ import annotations

import csv
import io
import math
import zlib
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ..erm import LassoProblem, generate_interpolation_dataset
from ..mechanisms import (
    BudgetSplit,
    PrivacyBudget,
    QopCalibration,
    calibrate_lop,
    calibrate_qop,
    run_lop,
    run_qop,
)
from ..rmt import WishartSpec, compute_constants
from ..solver import SolverConfig, SolverDivergence
from .config import SweepConfig

RUN_FIELDS = ["mechanism", "kappa", "run", "seed", "data_hash", "status",
              "empirical_risk", "solver_residual"]
SUMMARY_FIELDS = ["mechanism", "kappa", "runs_ok", "runs_failed", "avg_risk",
                  "std_risk", "se_risk", "avg_residual"]
TABLE_FIELDS = ["mechanism", "avg_std", "max_std", "avg_se", "max_se"]
TIMING_FIELDS = ["mechanism", "kappa", "avg_runtime_seconds", "max_runtime_seconds"]


@dataclass(frozen=True)
class RunRecord:
    mechanism: str
    kappa: float
    run: int
    seed: int
    data_hash: str
    status: str  # "ok" or "diverged@<iteration>"
    empirical_risk: float
    solver_residual: float
    wall_time_seconds: float

    def row(self) -> list:
        return [self.mechanism, repr(self.kappa), self.run, self.seed, self.data_hash,
                self.status, repr(self.empirical_risk), repr(self.solver_residual)]


def cell_seed(base_seed: int, mechanism: str, kappa: float, run: int) -> int:
    return base_seed ^ zlib.crc32(f"{mechanism}|{kappa!r}|{run}".encode())


def budget_split(cfg: SweepConfig) -> BudgetSplit:
    budget = PrivacyBudget(cfg.epsilon, cfg.delta)
    return BudgetSplit.from_fractions(budget, cfg.eps1_fraction, cfg.delta_fractions)


def qop_calibration(cfg: SweepConfig) -> QopCalibration:
    """Data-independent QOP calibration: L = d xi^2, rank-one Hessians.

    With b omitted the release needs no tau/eta, so both are passed as 0.
    """
    split = budget_split(cfg)
    consts = compute_constants(WishartSpec(cfg.data.d, cfg.m), split.deltas)
    L = cfg.data.d * cfg.data.xi**2
    return calibrate_qop(L, 1, split, consts)


@lru_cache(maxsize=64)
def _dataset(n, d, xi, sd, seed):
    return generate_interpolation_dataset(n, d, xi, sd, np.random.default_rng(seed))


def run_cell(cfg: SweepConfig, mechanism: str, kappa: float, run: int) -> RunRecord:
    dc = cfg.data
    data, _, anchor = _dataset(dc.n, dc.d, dc.xi, dc.anchor_noise_sd, cfg.base_seed + run)
    problem = LassoProblem(data, cfg.omega, kappa)
    seed = cell_seed(cfg.base_seed, mechanism, kappa, run)
    noise_rng = np.random.default_rng([seed, 1])
    scfg = SolverConfig(cfg.solver.iterations, None, cfg.solver.relaxation_exponent, seed)
    try:
        if mechanism == "qop":
            calib = qop_calibration(cfg)
            out = run_qop(problem, anchor, calib, WishartSpec(dc.d, cfg.m), scfg, noise_rng,
                          gaussian_release=cfg.gaussian_release)
        else:
            budget = PrivacyBudget(cfg.epsilon, cfg.delta)
            clip = cfg.clip if mechanism == "lop_clip" else None
            zeta = cfg.clip if clip is not None else problem.zeta
            calib = calibrate_lop(problem.L, zeta, budget)
            out = run_lop(problem, calib, scfg, noise_rng, clip=clip)
    except SolverDivergence as exc:
        return RunRecord(mechanism, kappa, run, seed, data.digest(),
                         f"diverged@{exc.iteration}", math.nan, math.nan, math.nan)
    diag = out.diagnostics
    return RunRecord(mechanism, kappa, run, seed, data.digest(), "ok",
                     diag["empirical_risk"], diag["solver_residual"], diag["wall_time_seconds"])


def _run_cell_args(args):
    return run_cell(*args)


def sweep_cells(cfg: SweepConfig):
    return [(m, float(k), r) for m in cfg.mechanisms for k in cfg.kappa_values
            for r in range(cfg.runs_per_point)]


def run_sweep(cfg: SweepConfig, workers: int = 1, progress=None) -> list[RunRecord]:
    """All (mechanism, kappa, run) cells, sorted so output never depends on scheduling."""
    cfg.validate()
    if "qop" in cfg.mechanisms:
        qop_calibration(cfg)  # fail fast on an infeasible split
    cells = [(cfg, m, k, r) for m, k, r in sweep_cells(cfg)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell_args, cells, chunksize=4))
    else:
        records = []
        for i, c in enumerate(cells):
            records.append(run_cell(*c))
            if progress is not None:
                progress(i + 1, len(cells))
    order = {m: i for i, m in enumerate(cfg.mechanisms)}
    return sorted(records, key=lambda r: (order[r.mechanism], r.kappa, r.run))


# -- statistics -----------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    mechanism: str
    kappa: float
    runs_ok: int
    runs_failed: int
    avg_risk: float
    std_risk: float  # sample standard deviation (ddof = 1)
    se_risk: float   # std / sqrt(runs_ok)
    avg_residual: float

    def row(self) -> list:
        return [self.mechanism, repr(self.kappa), self.runs_ok, self.runs_failed,
                repr(self.avg_risk), repr(self.std_risk), repr(self.se_risk),
                repr(self.avg_residual)]


def _mean(vals) -> float:
    return math.fsum(vals) / len(vals) if vals else math.nan


def _std(vals) -> float:
    if len(vals) < 2:
        return 0.0 if vals else math.nan
    mu = _mean(vals)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / (len(vals) - 1))


def summarize(records: list[RunRecord]) -> list[SummaryRow]:
    groups = defaultdict(list)
    for r in records:
        groups[(r.mechanism, r.kappa)].append(r)
    rows = []
    for (mech, kappa), rs in groups.items():
        ok = [r for r in rs if r.status == "ok"]
        risks = [r.empirical_risk for r in ok]
        std = _std(risks)
        se = std / math.sqrt(len(risks)) if risks else math.nan
        rows.append(SummaryRow(mech, kappa, len(ok), len(rs) - len(ok), _mean(risks), std, se,
                               _mean([r.solver_residual for r in ok])))
    order = {}
    for r in records:
        order.setdefault(r.mechanism, len(order))
    return sorted(rows, key=lambda s: (order[s.mechanism], s.kappa))


def table_statistics(summary: list[SummaryRow]) -> list[dict]:
    """Per mechanism: mean and max over kappa of the per-kappa std and SE."""
    by_mech = defaultdict(list)
    for s in summary:
        by_mech[s.mechanism].append(s)
    out = []
    for mech, rows in by_mech.items():
        stds = [s.std_risk for s in rows if not math.isnan(s.std_risk)]
        ses = [s.se_risk for s in rows if not math.isnan(s.se_risk)]
        out.append({"mechanism": mech, "avg_std": _mean(stds), "max_std": max(stds, default=math.nan),
                    "avg_se": _mean(ses), "max_se": max(ses, default=math.nan)})
    return out


def timing_statistics(records: list[RunRecord]) -> list[dict]:
    groups = defaultdict(list)
    for r in records:
        if r.status == "ok":
            groups[(r.mechanism, r.kappa)].append(r.wall_time_seconds)
            groups[(r.mechanism, "all")].append(r.wall_time_seconds)
    order = {}
    for m, _ in groups:
        order.setdefault(m, len(order))
    keys = sorted(groups, key=lambda mk: (order[mk[0]], mk[1] == "all",
                                          0.0 if mk[1] == "all" else mk[1]))
    return [{"mechanism": m, "kappa": k, "avg_runtime_seconds": _mean(groups[(m, k)]),
             "max_runtime_seconds": max(groups[(m, k)])} for m, k in keys]


# -- CSV ----------------------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def runs_csv(records) -> str:
    return _csv(RUN_FIELDS, [r.row() for r in records])


def summary_csv(summary) -> str:
    return _csv(SUMMARY_FIELDS, [s.row() for s in summary])


def table_csv(stats) -> str:
    return _csv(TABLE_FIELDS, [[s["mechanism"]] + [repr(s[k]) for k in TABLE_FIELDS[1:]]
                               for s in stats])


def timings_csv(stats) -> str:
    return _csv(TIMING_FIELDS, [[s["mechanism"], s["kappa"] if s["kappa"] == "all" else repr(s["kappa"]),
                                 repr(s["avg_runtime_seconds"]), repr(s["max_runtime_seconds"])]
                                for s in stats])


def read_runs_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


# -- scaling checks -------------------------------------------------------------------

def _spearman(a, b) -> float:
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    if np.std(ra) == 0 or np.std(rb) == 0:
        return math.nan
    return float(np.corrcoef(ra, rb)[0, 1])


def scaling_checks(summary: list[SummaryRow]) -> dict:
    """Qualitative shape of the risk-vs-kappa curves.

    lop_monotone: Spearman(kappa, LOP mean) >= 0.9 over the upper half of the grid
    qop_flat:     max/min of QOP means < 10
    gap:          LOP mean / QOP mean >= 100 at the largest kappa
    clip_order:   LOP-Clip mean <= LOP mean at the largest kappa
    Checks whose mechanisms are missing are omitted.
    """
    curves = defaultdict(dict)
    for s in summary:
        curves[s.mechanism][s.kappa] = s.avg_risk
    out = {}
    if "lop" in curves:
        ks = sorted(curves["lop"])
        top = ks[len(ks) // 2:]
        rho = _spearman(top, [curves["lop"][k] for k in top]) if len(top) > 1 else math.nan
        out["lop_monotone"] = {"value": rho, "threshold": 0.9, "pass": bool(rho >= 0.9)}
    if "qop" in curves:
        vals = list(curves["qop"].values())
        ratio = max(vals) / min(vals)
        out["qop_flat"] = {"value": ratio, "threshold": 10.0, "pass": bool(ratio < 10.0)}
    if "qop" in curves and "lop" in curves:
        kmax = max(curves["lop"])
        gap = curves["lop"][kmax] / curves["qop"][kmax]
        out["gap"] = {"value": gap, "threshold": 100.0, "pass": bool(gap >= 100.0)}
    if "lop" in curves and "lop_clip" in curves:
        kmax = max(curves["lop"])
        a, b = curves["lop_clip"][kmax], curves["lop"][kmax]
        out["clip_order"] = {"value": a / b, "threshold": 1.0, "pass": bool(a <= b)}
    return out
