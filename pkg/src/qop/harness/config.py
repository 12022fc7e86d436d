"""Experiment configuration: one JSON document with a section per experiment.

    {
      "sweep":       {...},   # risk vs kappa sweep and its spread table
      "bounds":      {...},   # bound optimisation grid over (epsilon, delta)
      "lemma_check": {...}
    }

Missing keys take the defaults below (the reference experimental setup);
unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

MECHANISMS = ("qop", "lop", "lop_clip")


class ConfigError(ValueError):
    pass


def default_kappas() -> list[float]:
    return [float(v) for v in np.logspace(-1, 2, 8)]


@dataclass
class DataConfig:
    n: int = 300
    d: int = 100
    xi: float = 5.0
    anchor_noise_sd: float = math.sqrt(0.1)

    def validate(self):
        if self.n < 1 or self.d < 1:
            raise ConfigError("data.n and data.d must be positive")
        if not self.xi > 0 or self.anchor_noise_sd < 0:
            raise ConfigError("data.xi must be positive and anchor_noise_sd nonnegative")


@dataclass
class SolverSettings:
    iterations: int = 1000
    relaxation_exponent: float = 0.5 + 2 * 0.001

    def validate(self):
        if self.iterations < 1:
            raise ConfigError("solver.iterations must be positive")
        if not 0.5 < self.relaxation_exponent <= 1:
            raise ConfigError("solver.relaxation_exponent must lie in (1/2, 1]")


@dataclass
class SweepConfig:
    kappa_values: list = field(default_factory=default_kappas)
    runs_per_point: int = 10
    mechanisms: list = field(default_factory=lambda: list(MECHANISMS))
    base_seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    omega: float = 1.0
    epsilon: float = 0.5
    delta: float = 0.01
    eps1_fraction: float = 1.0
    delta_fractions: list = field(default_factory=lambda: [0.5, 0.0, 0.5, 0.0])
    wishart_m: Optional[float] = None  # None: 2 d
    solver: SolverSettings = field(default_factory=SolverSettings)
    clip: float = 10000.0
    gaussian_release: bool = False  # the benchmark omits the release term b

    @property
    def m(self) -> float:
        return 2 * self.data.d if self.wishart_m is None else self.wishart_m

    def validate(self):
        self.data.validate()
        self.solver.validate()
        ks = [float(k) for k in self.kappa_values]
        if not ks or any(k <= 0 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ConfigError("kappa_values must be positive and strictly increasing")
        if self.runs_per_point < 1:
            raise ConfigError("runs_per_point must be at least 1")
        bad = [m for m in self.mechanisms if m not in MECHANISMS]
        if bad or not self.mechanisms:
            raise ConfigError(f"unknown mechanisms {bad}; choose from {MECHANISMS}")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be nonnegative")
        if self.omega < 0 or not self.clip > 0:
            raise ConfigError("omega must be nonnegative and clip positive")
        if not self.epsilon > 0 or not 0 < self.delta < 1:
            raise ConfigError("need epsilon > 0 and 0 < delta < 1")
        if not self.m > self.data.d:
            raise ConfigError("wishart_m must exceed d")
        if len(self.delta_fractions) != 4:
            raise ConfigError("delta_fractions needs four entries")


@dataclass
class BoundsConfig:
    epsilons: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])
    deltas: list = field(default_factory=lambda: [1e-3, 1e-2, 1e-1])
    paths: list = field(default_factory=lambda: ["exact", "inexact"])
    L: float = 1.0
    d: int = 12
    n: int = 10
    hess_rank: int = 1
    G: float = 1.0
    dist_sq: float = 1.0
    inexact_tau_eta: float = 0.001
    restarts: int = 8

    def validate(self):
        if not self.epsilons or any(e <= 0 for e in self.epsilons):
            raise ConfigError("epsilons must be positive")
        if not self.deltas or any(not 0 < v < 1 for v in self.deltas):
            raise ConfigError("deltas must lie in (0, 1)")
        if any(p not in ("exact", "inexact") for p in self.paths) or not self.paths:
            raise ConfigError("paths must be a subset of {exact, inexact}")
        if not 1 <= self.restarts <= 8:
            raise ConfigError("restarts must lie in [1, 8]")


@dataclass
class LemmaCheckConfig:
    trials: int = 1000
    seed: int = 0
    mc_samples: int = 100_000

    def validate(self):
        if self.trials < 1 or self.mc_samples < 1 or self.seed < 0:
            raise ConfigError("trials and mc_samples must be positive, seed nonnegative")


@dataclass
class ExperimentConfig:
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    lemma_check: LemmaCheckConfig = field(default_factory=LemmaCheckConfig)

    def validate(self) -> "ExperimentConfig":
        self.sweep.validate()
        self.bounds.validate()
        self.lemma_check.validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _build(cls, doc, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - set(names))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")
    kwargs = {}
    for key, value in doc.items():
        default = names[key].default_factory() if names[key].default_factory is not dataclasses.MISSING \
            else names[key].default
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, f"{where}.{key}")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(doc: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, doc, "config").validate()


def load_config(path: Optional[str | Path]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)
