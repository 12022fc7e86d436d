"""Grid of optimised QOP utility bounds over (epsilon, delta), exact and inexact paths."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

from ..bounds import BoundInputs, optimize_qop_bound
from ..mechanisms import PrivacyBudget
from .config import BoundsConfig

FIELDS = ["epsilon", "delta", "path", "bound", "eps1", "delta1", "delta2", "delta3",
          "delta4", "m", "restarts_used", "status"]


@dataclass(frozen=True)
class BoundPoint:
    epsilon: float
    delta: float
    path: str
    bound: float
    eps1: float
    deltas: tuple
    m: float
    restarts_used: int
    status: str

    def row(self) -> list:
        return ([repr(self.epsilon), repr(self.delta), self.path, repr(self.bound),
                 repr(self.eps1)] + [repr(v) for v in self.deltas]
                + [repr(self.m), self.restarts_used, self.status])


def bound_inputs(cfg: BoundsConfig, epsilon: float, delta: float, path: str) -> BoundInputs:
    te = 0.0 if path == "exact" else cfg.inexact_tau_eta
    return BoundInputs(L=cfg.L, d=cfg.d, n=cfg.n, hess_rank=cfg.hess_rank, G=cfg.G,
                       tau=te, eta=te, dist_sq=cfg.dist_sq,
                       budget=PrivacyBudget(epsilon, delta))


def optimize_point(cfg: BoundsConfig, epsilon: float, delta: float, path: str) -> BoundPoint:
    try:
        opt = optimize_qop_bound(bound_inputs(cfg, epsilon, delta, path), restarts=cfg.restarts)
    except RuntimeError as exc:
        nan = math.nan
        return BoundPoint(epsilon, delta, path, math.inf, nan, (nan,) * 4, nan, 0,
                          f"infeasible: {exc}")
    sp = opt.params.split
    return BoundPoint(epsilon, delta, path, opt.bound, sp.eps1, sp.deltas.as_tuple(),
                      opt.params.m_relaxed, opt.restarts_used, "ok")


def run_bound_grid(cfg: BoundsConfig, path: str, progress=None) -> list[BoundPoint]:
    points = []
    cells = [(e, d) for d in cfg.deltas for e in cfg.epsilons]
    for i, (eps, delta) in enumerate(cells):
        points.append(optimize_point(cfg, float(eps), float(delta), path))
        if progress is not None:
            progress(i + 1, len(cells))
    return points


def grid_csv(points: list[BoundPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    w.writerows(p.row() for p in points)
    return buf.getvalue()


def trend_checks(exact: Optional[list[BoundPoint]], inexact: Optional[list[BoundPoint]],
                 rtol: float = 1e-9) -> dict:
    """Nonincreasing in epsilon and in delta on each path; exact <= inexact pointwise."""
    out = {}
    for name, pts in (("exact", exact), ("inexact", inexact)):
        if not pts:
            continue
        table = {(p.epsilon, p.delta): p.bound for p in pts}
        eps = sorted({p.epsilon for p in pts})
        dels = sorted({p.delta for p in pts})
        worst_e = max((table[(b, d)] / table[(a, d)] for d in dels
                       for a, b in zip(eps, eps[1:])), default=0.0)
        worst_d = max((table[(e, b)] / table[(e, a)] for e in eps
                       for a, b in zip(dels, dels[1:])), default=0.0)
        out[f"{name}_nonincreasing_eps"] = {"value": worst_e, "pass": bool(worst_e <= 1 + rtol)}
        out[f"{name}_nonincreasing_delta"] = {"value": worst_d, "pass": bool(worst_d <= 1 + rtol)}
    if exact and inexact:
        ex = {(p.epsilon, p.delta): p.bound for p in exact}
        ratios = [ex[(p.epsilon, p.delta)] / p.bound for p in inexact
                  if (p.epsilon, p.delta) in ex]
        worst = max(ratios, default=0.0)
        out["exact_le_inexact"] = {"value": worst, "pass": bool(worst <= 1 + rtol)}
    return out
