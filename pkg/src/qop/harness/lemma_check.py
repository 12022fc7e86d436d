"""Randomised property suites for the linear-algebra lemmas and the Wishart constants.

Each trial draws from ``default_rng([seed, suite_index, trial])``, so a failure
is reproducible from the (seed, suite, trial) triple reported with it. Oracles
are looked up on the ``lemmas`` / ``rmt`` modules at call time.
"""
from __future__ import annotations

import math

import numpy as np

from .. import lemmas, rmt
from ..rmt import DeltaSplit, WishartSpec

SUITES = ("rank1_update", "low_rank_bound", "rank2_coupling", "density_ratio",
          "wishart_coverage", "alpha_monotone")


def _rng(seed, suite, trial):
    return np.random.default_rng([seed, SUITES.index(suite), trial])


def _spd(rng, d, floor=0.1):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (q * (floor + rng.exponential(1.0, d))) @ q.T


class _Suite:
    def __init__(self, name, seed):
        self.name, self.seed = name, seed
        self.trials = 0
        self.failures = 0
        self.first = None
        self.extra = {}

    def record(self, trial, ok, detail=""):
        self.trials += 1
        if not ok:
            self.failures += 1
            if self.first is None:
                self.first = {"seed": [self.seed, SUITES.index(self.name), trial], "detail": detail}

    def report(self):
        out = {"trials": self.trials, "failures": self.failures, "pass": self.failures == 0}
        if self.first is not None:
            out["first_failure"] = self.first
        out.update(self.extra)
        return out


def check_rank1(trials, seed, d=6, rtol=1e-10):
    s = _Suite("rank1_update", seed)
    for t in range(trials):
        rng = _rng(seed, s.name, t)
        a = _spd(rng, d)
        v = rng.standard_normal(d)
        e = rng.choice([-0.5, 1.0]) * np.outer(v, v) / max(1.0, float(v @ v))
        got = lemmas.det_ratio_rank1(a, e)
        sa, la = np.linalg.slogdet(a)
        sb, lb = np.linalg.slogdet(a + e)
        want = sa * sb * math.exp(lb - la)
        s.record(t, abs(got - want) <= rtol * abs(want), f"got {got!r}, oracle {want!r}")
    return s.report()


def check_low_rank(trials, seed, d=5):
    s = _Suite("low_rank_bound", seed)
    for t in range(trials):
        rng = _rng(seed, s.name, t)
        alpha = float(rng.uniform(0.1, 2.0))
        a = _spd(rng, d, floor=alpha)
        r = int(rng.integers(0, d + 1))
        L = float(rng.uniform(0.1, 3.0))
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        ev = np.zeros(d)
        ev[:r] = rng.uniform(-1, 1, r) * L
        ev = np.clip(ev, -0.999 * alpha, None)  # keep A + E nonsingular
        e = (q * ev) @ q.T
        e = 0.5 * (e + e.T)
        ratio, bound = lemmas.low_rank_det_bound(a, e, alpha, L, r)
        s.record(t, ratio <= bound * (1 + 1e-12), f"ratio {ratio!r} > bound {bound!r}")
    return s.report()


def check_rank2(trials, seed, d=10):
    s = _Suite("rank2_coupling", seed)
    for t in range(trials):
        rng = _rng(seed, s.name, t)
        u = rng.standard_normal(d) * rng.choice([1e-3, 1.0, 1e3])
        b = rng.standard_normal(d) * rng.choice([1e-3, 1.0, 1e3])
        if t % 10 == 0:
            u = rng.standard_normal() * b  # parallel (w = 0) branch
        U = lemmas.build_rank2_coupling(u, b)
        sv = np.linalg.svd(U, compute_uv=False)
        target = np.linalg.norm(u) / np.linalg.norm(b)
        ok_rank = sv[2] <= 1e-10 * max(sv[0], 1e-300)
        ok_map = np.linalg.norm(U @ b - u) <= 1e-12 * (1 + np.linalg.norm(u))
        ok_norm = abs(sv[0] - target) <= 1e-10 * (1 + target)
        s.record(t, bool(ok_rank and ok_map and ok_norm),
                 f"rank {ok_rank}, map {ok_map}, norm {ok_norm}")
    return s.report()


def check_density_ratio(trials, seed, d=4, m=12, split=DeltaSplit(0.05, 0.0, 0.05, 0.0)):
    """log q(W+U) - log q(W) <= ||U||_op f_coeff rank(U) for lambda_min(W) >= alpha."""
    s = _Suite("density_ratio", seed)
    spec = WishartSpec(d, m)
    consts = rmt.compute_constants(spec, split)
    worst = -math.inf
    for t in range(trials):
        rng = _rng(seed, s.name, t)
        while True:
            w = rmt.sample_wishart(spec, rng)
            lmin = rmt.eig_extremes(w)[0]
            if lmin >= consts.alpha:
                break
        r = int(rng.integers(1, 3))
        q, _ = np.linalg.qr(rng.standard_normal((d, r)))
        sv = rng.uniform(-min(2.0, 0.999 * lmin), 2.0, r)
        u = (q * sv) @ q.T
        u = 0.5 * (u + u.T)
        lhs = rmt.log_wishart_density(w + u, spec) - rmt.log_wishart_density(w, spec)
        rhs = lemmas.op_norm(u) * consts.f_coeff * lemmas.numerical_rank(u)
        worst = max(worst, lhs - rhs)
        s.record(t, lhs <= rhs + 1e-8, f"lhs {lhs!r} > rhs {rhs!r}")
    s.extra = {"alpha": consts.alpha, "f_coeff": consts.f_coeff, "max_lhs_minus_rhs": worst}
    return s.report()


def wishart_coverage(samples, seed, d=5, m=20, delta1=0.05, delta3_values=(0.01, 0.05),
                     delta4=0.01):
    """Monte Carlo frequencies against the certified eigenvalue events, with 3-SE slack."""
    s = _Suite("wishart_coverage", seed)
    spec = WishartSpec(d, m)
    w = rmt.sample_wishart_batch(spec, samples, _rng(seed, s.name, 0))
    ev = np.linalg.eigvalsh(w)
    lmin, lmax = ev[:, 0], ev[:, -1]
    margins = []
    for i, d3 in enumerate(delta3_values):
        c = rmt.compute_constants(spec, DeltaSplit(delta1, 0.0, d3, delta4))
        above = lmin >= c.alpha
        p = float(above.mean())
        se = math.sqrt(p * (1 - p) / samples)
        thr = 1 - d3 - 3 * se
        na = int(above.sum())
        layer = float(np.mean(lmin[above] <= c.alpha + c.alpha1)) if na else 0.0
        se_l = math.sqrt(layer * (1 - layer) / max(na, 1))
        top = float(np.mean(lmax[above] <= c.beta)) if na else 1.0
        se_t = math.sqrt(top * (1 - top) / max(na, 1))
        checks = {
            "lambda_min_above_alpha": (p, thr, p >= thr),
            "boundary_layer": (layer, delta1 + 3 * se_l, layer <= delta1 + 3 * se_l),
            "lambda_max_below_beta": (top, 1 - delta4 - 3 * se_t, top >= 1 - delta4 - 3 * se_t),
        }
        for j, (name, (obs, lim, ok)) in enumerate(checks.items()):
            s.record(3 * i + j, bool(ok), f"delta3={d3} {name}: observed {obs!r}, limit {lim!r}")
            margins.append({"delta3": d3, "check": name, "observed": obs, "limit": lim})
    s.extra = {"samples": samples, "margins": margins}
    return s.report()


def check_alpha_monotone(seed, d=5, m=20, grid=None):
    s = _Suite("alpha_monotone", seed)
    grid = np.geomspace(1e-4, 0.5, 25) if grid is None else grid
    spec = WishartSpec(d, m)
    alphas = [rmt.compute_constants(spec, DeltaSplit(0.05, 0.0, float(d3), 0.0)).alpha
              for d3 in grid]
    for t, (a, b) in enumerate(zip(alphas, alphas[1:])):
        s.record(t, b >= a, f"alpha decreased from {a!r} to {b!r}")
    return s.report()


def run_lemma_check(trials: int = 1000, seed: int = 0, mc_samples: int = 100_000) -> dict:
    suites = {
        "rank1_update": check_rank1(trials, seed),
        "low_rank_bound": check_low_rank(trials, seed),
        "rank2_coupling": check_rank2(trials, seed),
        "density_ratio": check_density_ratio(trials, seed),
        "wishart_coverage": wishart_coverage(mc_samples, seed),
        "alpha_monotone": check_alpha_monotone(seed),
    }
    return {"seed": seed, "trials": trials, "suites": suites,
            "pass": all(v["pass"] for v in suites.values())}
