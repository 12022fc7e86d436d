"""One test per acceptance criterion; each logs a PASS/FAIL line to the terminal summary."""
import filecmp
import math
import time

import numpy as np
import pytest

from qop import cli
from qop.erm import LassoProblem, generate_interpolation_dataset
from qop.harness import bound_sweep, lemma_check, sweep
from qop.harness.config import BoundsConfig, SweepConfig
from qop.mechanisms import PrivacyBudget, calibrate_lop, gaussian_release_scale
from qop.solver import SolverConfig, proj_box, prox_l1, stotos
from qop.special import inverse_lower_incomplete_gamma, lower_incomplete_gamma
from test_solver import interpolating_quadratic, test_stopping_soundness


@pytest.fixture
def record(acceptance_log):
    def rec(n, ok, detail):
        acceptance_log.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        return ok
    return rec


def test_c01_figure2_scaling(record):
    cfg = SweepConfig()
    t0 = time.perf_counter()
    summary = sweep.summarize(sweep.run_sweep(cfg))
    elapsed = time.perf_counter() - t0
    checks = sweep.scaling_checks(summary)
    names = ("lop_monotone", "qop_flat", "gap")
    ok = all(checks[k]["pass"] for k in names) and elapsed < 60
    detail = ", ".join(f"{k}={checks[k]['value']:.4g}" for k in names)
    record(1, ok, f"{detail}, runtime {elapsed:.1f}s")
    assert ok


def test_c02_lop_calibration(record):
    c = calibrate_lop(1.0, 1.0, PrivacyBudget(0.5, 0.01))
    ok = abs(c.sigma2 - 177.546) <= 0.01 and c.Delta == 4.0
    record(2, ok, f"sigma2={c.sigma2:.6f}, Delta={c.Delta!r}")
    assert ok


def test_c03_gaussian_release(record):
    st = gaussian_release_scale(0.5, 1.0, 1.0, 2.0, 0.0, 1.0, 0.05)
    ok = abs(st - 5.0746) <= 1e-3
    record(3, ok, f"sigma_tilde={st:.6f}")
    assert ok


def test_c04_wishart_coverage(record):
    t0 = time.perf_counter()
    rep = lemma_check.wishart_coverage(100_000, seed=0)
    elapsed = time.perf_counter() - t0
    ok = rep["pass"] and rep["trials"] == 6 and elapsed < 30
    worst = min(m["limit"] - m["observed"] if m["check"] == "boundary_layer"
                else m["observed"] - m["limit"] for m in rep["margins"])
    record(4, ok, f"6/6 events within 3 SE (min margin {worst:.4g}), runtime {elapsed:.1f}s"
           if ok else f"{rep}")
    assert ok


def test_c05_density_ratio(record):
    rep = lemma_check.check_density_ratio(1000, seed=0)
    ok = rep["pass"] and rep["trials"] == 1000
    record(5, ok, f"{rep['trials'] - rep['failures']}/1000 pairs, "
                  f"max lhs-rhs {rep['max_lhs_minus_rhs']:.4g}")
    assert ok


def test_c06_lemma_oracles(record):
    r1 = lemma_check.check_rank1(50, seed=0)
    lr = lemma_check.check_low_rank(1000, seed=0)
    r2 = lemma_check.check_rank2(1000, seed=0)
    ok = r1["pass"] and lr["pass"] and r2["pass"]
    record(6, ok, f"rank-1 {r1['trials'] - r1['failures']}/50, low-rank "
                  f"{lr['trials'] - lr['failures']}/1000, rank-2 {r2['trials'] - r2['failures']}/1000")
    assert ok


GAMMA_GRID = [(float(x), p) for p in (0.5, 1.5, 5.0, 25.0) for x in np.geomspace(1e-6, 50, 40)]


def _round_trip_error(x, p):
    try:
        return abs(inverse_lower_incomplete_gamma(lower_incomplete_gamma(x, p), p) - x)
    except ValueError:
        return math.inf


def test_c07a_gamma_at_one(record):
    err = abs(lower_incomplete_gamma(1.0, 1.0) - (1 - math.exp(-1)))
    ok = err <= 1e-12
    record("7a", ok, f"|gamma(1,1) - (1 - 1/e)| = {err:.2e}")
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "gamma(x, p) rounds to Gamma(p) in double precision for large x at small p, so the "
    "forward map is not injective there and no inverse can recover x"))
def test_c07b_gamma_round_trip(record):
    errs = [(x, p, _round_trip_error(x, p)) for x, p in GAMMA_GRID]
    bad = [(x, p, e) for x, p, e in errs if not e <= 1e-8]
    ok = not bad
    record("7b", ok, f"{len(GAMMA_GRID) - len(bad)}/{len(GAMMA_GRID)} grid points round-trip to 1e-8; "
                     "failing: " + ", ".join(f"(x={x:.3g}, p={p:g})" for x, p, _ in bad))
    assert ok


def test_c08_solver(record):
    obj, c = interpolating_quadratic(seed=0, d=10, n=5)
    res = stotos(obj, SolverConfig(iterations=10_000, seed=0))
    rel = float(np.linalg.norm(res.theta - c) / np.linalg.norm(c))
    x = np.array([3.0, -1.0, 0.2, -0.7, 0.0])
    prox_ok = np.array_equal(prox_l1(x, 0.5), np.sign(x) * np.maximum(np.abs(x) - 0.5, 0.0))
    proj_ok = np.array_equal(proj_box(x, 0.5), np.minimum(np.maximum(x, -0.5), 0.5))
    test_stopping_soundness()  # raises on any unsound pass
    ok = rel <= 1e-2 and prox_ok and proj_ok
    record(8, ok, f"quadratic rel err {rel:.2e}, prox/proj exact {prox_ok and proj_ok}, "
                  "stopping rule sound on 100 instances")
    assert ok


def test_c09_figure1_trends(record):
    cfg = BoundsConfig()
    t0 = time.perf_counter()
    ex = bound_sweep.run_bound_grid(cfg, "exact")
    inex = bound_sweep.run_bound_grid(cfg, "inexact")
    elapsed = time.perf_counter() - t0
    checks = bound_sweep.trend_checks(ex, inex)
    ok = (all(c["pass"] for c in checks.values()) and elapsed < 120
          and all(p.status == "ok" for p in ex + inex))
    record(9, ok, ", ".join(f"{k}={v['value']:.6g}" for k, v in checks.items())
           + f", runtime {elapsed:.1f}s")
    assert ok


def test_c10_interpolation_constants(record):
    data, theta_star, _ = generate_interpolation_dataset(300, 100, 5.0, math.sqrt(0.1),
                                                         np.random.default_rng(0))
    kappa = 10.0
    prob = LassoProblem(data, 1.0, kappa)
    max_loss = float(np.max(prob.losses(theta_star)))
    thetas = np.random.default_rng(1).uniform(-kappa, kappa, (1000, data.d))
    grads = ((thetas @ data.X.T) - data.y)[:, :, None] * data.X[None]
    max_grad = float(np.linalg.norm(grads, axis=2).max())
    ok = (max_loss <= 1e-18 and prob.L == data.d * 25.0 and prob.G == math.sqrt(data.d) * 1.0
          and max_grad <= prob.zeta)
    record(10, ok, f"max loss at theta* {max_loss:.1e}, L={prob.L}, G={prob.G}, "
                   f"max sampled grad {max_grad:.4g} <= zeta {prob.zeta:.4g}")
    assert ok


CLI_RUNS = [
    (["calibrate"], ["calibration.json"]),
    (["sweep-kappa"], ["runs.csv", "summary.csv", "table_g4.csv", "config.json", "figure2.svg"]),
    (["optimize-bound"], ["figure1_exact.csv", "figure1_inexact.csv", "config.json"]),
    (["lemma-check"], ["lemma_check.json"]),
    (["run-single", "--kappa", "100"], ["run_single.json"]),
]


def test_c11_determinism(record, tmp_path, capsys):
    same, total = 0, 0
    for args, files in CLI_RUNS:
        a, b = tmp_path / args[0] / "a", tmp_path / args[0] / "b"
        codes = [cli.main(args + ["--out-dir", str(o)]) for o in (a, b)]
        assert codes == [0, 0], args
        for f in files:
            total += 1
            same += filecmp.cmp(a / f, b / f, shallow=False)
    capsys.readouterr()
    ok = same == total
    record(11, ok, f"{same}/{total} output files byte-identical across 5 commands")
    assert ok
