import json

import numpy as np
import pytest

from qop import cli, lemmas
from qop.harness import sweep

SMALL = {
    "sweep": {"kappa_values": [0.5, 50.0], "runs_per_point": 2,
              "solver": {"iterations": 100}},
    "bounds": {"epsilons": [1.0, 2.0], "deltas": [0.01, 0.1], "restarts": 2},
    "lemma_check": {"trials": 20, "mc_samples": 4000},
}


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return str(path)


def run(args, out):
    return cli.main(list(args) + ["--out-dir", str(out)])


def read_all(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


DETERMINISTIC = {
    "calibrate": ["calibration.json"],
    "sweep-kappa": ["runs.csv", "summary.csv", "table_g4.csv", "figure2.svg", "config.json"],
    "optimize-bound": ["figure1_exact.csv", "figure1_inexact.csv", "figure1_exact.svg",
                       "config.json"],
    "lemma-check": ["lemma_check.json"],
    "run-single": ["run_single.json"],
}


@pytest.mark.parametrize("command", list(DETERMINISTIC))
def test_byte_identical_reruns(command, cfg_file, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run([command, "--config", cfg_file, "--seed", "3"], a) == 0
    assert run([command, "--config", cfg_file, "--seed", "3"], b) == 0
    fa, fb = read_all(a), read_all(b)
    for name in DETERMINISTIC[command]:
        assert fa[name] == fb[name], name


def test_calibrate_output(tmp_path, capsys):
    assert run(["calibrate"], tmp_path) == 0
    doc = json.loads((tmp_path / "calibration.json").read_text())
    assert doc["inputs"]["L"] == 2500 and doc["inputs"]["m"] == 200
    assert doc["qop"]["sigma_tilde"] == 0
    assert doc["qop"]["sigma2"] > 0 and doc["lop_clip"]["Delta"] == 2 * 2500 / 0.5
    assert json.loads(capsys.readouterr().out) == doc


def test_seed_changes_sweep(cfg_file, tmp_path):
    run(["sweep-kappa", "--config", cfg_file, "--seed", "1"], tmp_path / "a")
    run(["sweep-kappa", "--config", cfg_file, "--seed", "2"], tmp_path / "b")
    assert (tmp_path / "a/runs.csv").read_bytes() != (tmp_path / "b/runs.csv").read_bytes()


def test_run_single_matches_sweep(cfg_file, tmp_path, capsys):
    assert run(["run-single", "--config", cfg_file, "--mechanisms", "lop", "--kappa", "50",
                "--run", "1"], tmp_path) == 0
    doc = json.loads((tmp_path / "run_single.json").read_text())
    assert "wall time" in capsys.readouterr().err
    run(["sweep-kappa", "--config", cfg_file, "--mechanisms", "lop"], tmp_path / "s")
    rows = sweep.read_runs_csv((tmp_path / "s/runs.csv").read_text())
    match = [r for r in rows if r["kappa"] == "50.0" and r["run"] == "1"][0]
    assert float(match["empirical_risk"]) == doc["empirical_risk"]


def test_infeasible_split_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"sweep": {"delta_fractions": [1.0, 0.0, 0.0, 0.0]}}))
    assert run(["calibrate", "--config", str(path)], tmp_path) == 1
    assert "delta3" in capsys.readouterr().err


def test_bad_config_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"sweep": {"runs": 3}}))
    assert run(["sweep-kappa", "--config", str(path)], tmp_path) == 1
    assert run(["sweep-kappa", "--kappas", "1,x"], tmp_path) == 1
    assert run(["sweep-kappa", "--mechanisms", "dpsgd"], tmp_path) == 1


def test_numerical_failure_exit_2(tmp_path, monkeypatch, cfg_file):
    def diverged(cfg, mech, kappa, run):
        return sweep.RunRecord(mech, kappa, run, 0, "h", "diverged@4", np.nan, np.nan, np.nan)
    monkeypatch.setattr(sweep, "run_cell", diverged)
    assert run(["run-single", "--config", cfg_file], tmp_path) == 2


def test_corrupted_oracle_exit_3(tmp_path, monkeypatch, cfg_file, capsys):
    real = lemmas.build_rank2_coupling
    monkeypatch.setattr(lemmas, "build_rank2_coupling", lambda u, b: 2.0 * real(u, b))
    assert run(["lemma-check", "--config", cfg_file], tmp_path) == 3
    out = capsys.readouterr().out
    assert "[FAIL] rank2_coupling" in out and "first failure at rng key" in out
    doc = json.loads((tmp_path / "lemma_check.json").read_text())
    assert doc["suites"]["rank2_coupling"]["first_failure"]["seed"][1] == 2
    assert doc["suites"]["rank1_update"]["pass"]


def test_check_failure_exit_3(tmp_path, cfg_file, monkeypatch):
    # two small kappas cannot show a 100x LOP/QOP gap
    assert run(["sweep-kappa", "--config", cfg_file, "--kappas", "0.1,0.2", "--check"],
               tmp_path) == 3
    assert run(["sweep-kappa", "--config", cfg_file, "--kappas", "0.1,0.2"], tmp_path) == 0
