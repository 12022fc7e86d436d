"""Least-squares LASSO problems in the interpolation regime.

Objective: J(theta) = sum_i 0.5 (x_i^T theta - y_i)^2 + omega ||theta||_1,
constrained to the box C = [-kappa, kappa]^d.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class DataPoint:
    x: np.ndarray
    y: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """n points stored row-wise; every feature lies in [-xi, xi]."""

    X: np.ndarray
    y: np.ndarray
    xi: float

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"inconsistent shapes X={X.shape}, y={y.shape}")
        if self.xi <= 0:
            raise ValueError("xi must be positive")
        if np.max(np.abs(X), initial=0.0) > self.xi * (1 + 1e-12):
            raise ValueError("features exceed the domain bound xi")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def points(self) -> list[DataPoint]:
        return [DataPoint(x, float(v)) for x, v in zip(self.X, self.y)]

    def digest(self) -> str:
        """Short content hash, used to verify that paired runs share data."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        h.update(repr(float(self.xi)).encode())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Anchor:
    """Approximate common minimiser theta~* with accuracy eta; never released."""

    theta_tilde_star: np.ndarray
    eta: float

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")


def generate_interpolation_dataset(n: int, d: int, xi: float, anchor_noise_sd: float,
                                   rng: np.random.Generator):
    """Synthetic data with a common minimiser.

    Draw order: X (n x d), theta*, then the anchor offset. X is rescaled
    globally by xi / max|X_ij|, and y_i = x_i^T theta* is formed after scaling,
    so every per-point loss vanishes at theta*.

    Returns (dataset, theta_star, anchor).
    """
    if n < 1 or d < 1 or xi <= 0:
        raise ValueError("need n, d >= 1 and xi > 0")
    X = rng.standard_normal((n, d))
    X *= xi / np.max(np.abs(X))
    theta_star = rng.standard_normal(d)
    # row-wise dots, the same reduction loss_grad uses, so x_i^T theta* - y_i is exactly 0
    y = np.array([x @ theta_star for x in X])
    offset = anchor_noise_sd * rng.standard_normal(d)
    theta_tilde = theta_star + offset
    anchor = Anchor(theta_tilde, float(np.linalg.norm(theta_tilde - theta_star)))
    return Dataset(X, y, xi), theta_star, anchor


@dataclass(frozen=True, eq=False)
class LassoProblem:
    data: Dataset
    omega: float
    kappa: float
    hess_rank: int = field(default=1, init=False)

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def d(self) -> int:
        return self.data.d

    @property
    def L(self) -> float:
        """Per-point smoothness d xi^2 (bounds ||x_i||^2)."""
        return self.d * self.data.xi**2

    @property
    def G(self) -> float:
        """Bound on subgradients of omega ||.||_1."""
        return math.sqrt(self.d) * self.omega

    @property
    def diam(self) -> float:
        return 2.0 * self.kappa * math.sqrt(self.d)

    @property
    def zeta(self) -> float:
        """Gradient bound (diam(C) xi sqrt(d) + sup|y_i|) xi sqrt(d) over C."""
        s = self.data.xi * math.sqrt(self.d)
        return (self.diam * s + float(np.max(np.abs(self.data.y), initial=0.0))) * s

    @cached_property
    def gram(self) -> np.ndarray:
        """sum_i x_i x_i^T."""
        X = self.data.X
        return X.T @ X

    # -- evaluations --------------------------------------------------------

    def residuals(self, theta: np.ndarray) -> np.ndarray:
        return self.data.X @ theta - self.data.y

    def loss_grad(self, theta: np.ndarray, i: int) -> np.ndarray:
        if not 0 <= i < self.n:
            raise IndexError(f"point index {i} out of range for n={self.n}")
        x = self.data.X[i]
        return (x @ theta - self.data.y[i]) * x

    def clipped_loss_grad(self, theta: np.ndarray, i: int, clip: float) -> np.ndarray:
        return clip_vector(self.loss_grad(theta, i), clip)

    def loss_grad_sum(self, theta: np.ndarray) -> np.ndarray:
        return self.data.X.T @ self.residuals(theta)

    def losses(self, theta: np.ndarray) -> np.ndarray:
        return 0.5 * self.residuals(theta) ** 2

    def empirical_objective(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(np.sum(self.losses(theta))) + self.omega * float(np.sum(np.abs(theta)))


def clip_vector(g: np.ndarray, clip: float) -> np.ndarray:
    if clip <= 0:
        raise ValueError("clip threshold must be positive")
    norm = float(np.linalg.norm(g))
    if norm <= clip:
        return g
    return g * (clip / norm)


# -- JSON round trip ------------------------------------------------------------

def dataset_to_json(data: Dataset, theta_star=None, anchor: Anchor | None = None) -> dict:
    doc = {
        "d": data.d,
        "n": data.n,
        "xi": data.xi,
        "points": [{"x": row.tolist(), "y": float(v)} for row, v in zip(data.X, data.y)],
    }
    doc["theta_star"] = None if theta_star is None else np.asarray(theta_star).tolist()
    doc["theta_tilde_star"] = None if anchor is None else anchor.theta_tilde_star.tolist()
    doc["eta"] = None if anchor is None else anchor.eta
    return doc


def dataset_from_json(doc: dict):
    X = np.array([p["x"] for p in doc["points"]], dtype=float).reshape(doc["n"], doc["d"])
    y = np.array([p["y"] for p in doc["points"]], dtype=float)
    data = Dataset(X, y, float(doc["xi"]))
    theta_star = None if doc.get("theta_star") is None else np.array(doc["theta_star"])
    anchor = None
    if doc.get("theta_tilde_star") is not None:
        anchor = Anchor(np.array(doc["theta_tilde_star"]), float(doc["eta"]))
    return data, theta_star, anchor


def save_dataset(path: str | Path, data: Dataset, theta_star=None, anchor=None) -> None:
    Path(path).write_text(json.dumps(dataset_to_json(data, theta_star, anchor)))


def load_dataset(path: str | Path):
    return dataset_from_json(json.loads(Path(path).read_text()))
