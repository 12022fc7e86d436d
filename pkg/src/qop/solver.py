"""Stochastic three-operator splitting for  sum_i l~(theta; z_i) + omega ||theta||_1 + i_C(theta).

C is the box [-kappa, kappa]^d (kappa = inf for no constraint). One iteration:

    theta_k = prox_{rho r}(x_k)
    z_k     = proj_C(2 theta_k - x_k - rho n grad l~(theta_k; z_{i_k}))
    x_{k+1} = x_k + lambda_k (z_k - theta_k),   lambda_k = (k+1)^(-exponent)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class SolverDivergence(ArithmeticError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration


def prox_l1(x: np.ndarray, t: float) -> np.ndarray:
    """Soft thresholding: argmin_u 0.5||u - x||^2 + t||u||_1."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    if t == 0:
        return x.copy()
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def proj_box(x: np.ndarray, kappa: float) -> np.ndarray:
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return np.clip(x, -kappa, kappa)


@dataclass(frozen=True)
class CompositeObjective:
    """Handle for a perturbed finite-sum problem.

    ``point_grad(theta, i)`` is the gradient of a single smooth term l~(.; z_i)
    (perturbation already split as 1/n per point); ``smooth_grad(theta)`` is
    the sum over all points. ``lipschitz`` is Lip(n grad l~), used for the
    default step.
    """

    n: int
    d: int
    point_grad: Callable[[np.ndarray, int], np.ndarray]
    smooth_grad: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    omega: float = 0.0
    kappa: float = math.inf
    smooth_value: Optional[Callable[[np.ndarray], float]] = None

    def prox(self, x: np.ndarray, step: float) -> np.ndarray:
        return prox_l1(x, step * self.omega) if self.omega > 0 else x

    def project(self, x: np.ndarray) -> np.ndarray:
        return proj_box(x, self.kappa) if math.isfinite(self.kappa) else x

    def value(self, theta: np.ndarray) -> float:
        """Full perturbed objective (smooth part + omega ||.||_1); needs ``smooth_value``."""
        if self.smooth_value is None:
            raise ValueError("objective has no smooth_value")
        return self.smooth_value(theta) + self.omega * float(np.sum(np.abs(theta)))


@dataclass(frozen=True)
class SolverConfig:
    iterations: int = 1000
    step: Optional[float] = None  # None: 1 / Lip(n grad l~)
    relaxation_exponent: float = 0.5 + 2 * 0.001
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0.5 < self.relaxation_exponent <= 1.0:
            raise ValueError("relaxation exponent must lie in (1/2, 1]")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")


@dataclass
class SolverResult:
    theta: np.ndarray
    z: np.ndarray  # last projected iterate z_{K-1}, always feasible
    iterations_run: int
    stationarity_residual: float
    outside_box: bool = False  # theta_K left C by more than 1e-12


def stationarity_residual(objective: CompositeObjective, theta: np.ndarray) -> float:
    """dist(0, grad smooth + omega d||.||_1 + N_C) at theta, in closed form per coordinate."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    kappa, omega = objective.kappa, objective.omega
    t = np.clip(theta, -kappa, kappa) if math.isfinite(kappa) else theta
    g = objective.smooth_grad(t)
    # subdifferential of omega |t_j| as an interval [lo, hi]
    lo = np.where(t > 0, omega, -omega)
    hi = np.where(t < 0, -omega, omega)
    if math.isfinite(kappa):
        hi = np.where(t >= kappa, np.inf, hi)
        lo = np.where(t <= -kappa, -np.inf, lo)
    target = -g
    gap = np.maximum(lo - target, 0.0) + np.maximum(target - hi, 0.0)
    return float(np.linalg.norm(gap))


def check_stopping(residual: float, tau: float, alpha: float, sigma2: float) -> bool:
    """Computable surrogate: residual <= sqrt(2 tau alpha sigma^2) implies tau-suboptimality."""
    if tau <= 0 or alpha <= 0 or sigma2 <= 0:
        raise ValueError("tau, alpha and sigma2 must be positive")
    return residual <= math.sqrt(2.0 * tau * alpha * sigma2)


def stotos(objective: CompositeObjective, config: SolverConfig,
           x0: Optional[np.ndarray] = None,
           callback: Optional[Callable[[int, np.ndarray], None]] = None) -> SolverResult:
    """Run K updates from x_0 (zeros by default) and return theta_K = prox(x_K).

    Indices are drawn uniformly with replacement, all K of them up front.
    """
    n = objective.n
    step = config.step if config.step is not None else 1.0 / objective.lipschitz
    if not (step > 0 and math.isfinite(step)):
        raise ValueError(f"invalid step size {step}")
    K = config.iterations
    rng = np.random.default_rng(config.seed)
    idx = rng.integers(0, n, size=K)
    lambdas = (np.arange(K) + 1.0) ** (-config.relaxation_exponent)
    scale = step * n

    x = np.zeros(objective.d) if x0 is None else np.array(x0, dtype=float)
    z = objective.project(x)
    for k in range(K):
        theta = objective.prox(x, step)
        z = objective.project(2.0 * theta - x - scale * objective.point_grad(theta, int(idx[k])))
        x = x + lambdas[k] * (z - theta)
        if not np.isfinite(x).all():
            raise SolverDivergence(k)
        if callback is not None:
            callback(k, theta)
    theta = objective.prox(x, step)

    kappa = objective.kappa
    outside = bool(math.isfinite(kappa) and np.max(np.abs(theta)) > kappa + 1e-12)
    return SolverResult(
        theta=theta,
        z=z,
        iterations_run=K,
        stationarity_residual=stationarity_residual(objective, theta),
        outside_box=outside,
    )
