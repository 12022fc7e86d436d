"""Noise calibration and end-to-end runs of the QOP, LOP and LOP-Clip mechanisms.

QOP solves   J(theta) + sigma^2/2 (theta - theta~*)^T W (theta - theta~*)   over C,
with W ~ Wishart(d, m), then releases theta + b, b ~ N(0, sigma~^2 I).
LOP solves   J(theta) + Delta/2 ||theta||^2 + a^T theta,   a ~ N(0, sigma^2 I).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .erm import Anchor, LassoProblem, clip_vector
from .rmt import RmtConstants, WishartSpec, DeltaSplit, eig_extremes, sample_wishart
from .solver import CompositeObjective, SolverConfig, stotos


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class BudgetSplit:
    eps1: float
    eps2: float
    deltas: DeltaSplit

    def __post_init__(self):
        if self.eps1 < 0 or self.eps2 < 0:
            raise ValueError("epsilon parts must be nonnegative")

    @property
    def epsilon(self) -> float:
        return self.eps1 + self.eps2

    @property
    def delta(self) -> float:
        return self.deltas.total

    @classmethod
    def from_fractions(cls, budget: PrivacyBudget, eps1_fraction: float,
                       delta_fractions) -> "BudgetSplit":
        """Split (eps, delta) by fractions; the last delta part absorbs rounding."""
        fr = [float(v) for v in delta_fractions]
        if len(fr) != 4 or any(v < 0 for v in fr) or abs(math.fsum(fr) - 1.0) > 1e-9:
            raise ValueError(f"delta fractions must be 4 nonnegative numbers summing to 1, got {fr}")
        if not 0 <= eps1_fraction <= 1:
            raise ValueError("eps1 fraction must lie in [0, 1]")
        eps1 = budget.epsilon * eps1_fraction
        parts = [budget.delta * v for v in fr]
        return cls(eps1, budget.epsilon - eps1, DeltaSplit(*parts))


@dataclass(frozen=True)
class QopCalibration:
    sigma2: float
    sigma_tilde: float
    constants: Optional[RmtConstants]
    tau: float = 0.0
    eta: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mechanism": "qop",
            "sigma2": self.sigma2,
            "sigma_tilde": self.sigma_tilde,
            "tau": self.tau,
            "eta": self.eta,
            "rmt_constants": None if self.constants is None else self.constants.to_dict(),
        }


@dataclass(frozen=True)
class LopCalibration:
    sigma2: float
    Delta: float
    zeta_used: float

    def to_dict(self) -> dict:
        return {"mechanism": "lop", "sigma2": self.sigma2, "Delta": self.Delta,
                "zeta_used": self.zeta_used}


@dataclass
class MechanismOutput:
    theta_final: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> dict:
        diag = dict(self.diagnostics)
        if not include_timing:
            diag.pop("wall_time_seconds", None)
        return {"theta_final": np.asarray(self.theta_final).tolist(), "diagnostics": diag}


# -- calibration ----------------------------------------------------------------

def curvature_noise_scale(L: float, hess_rank: int, eps1: float, alpha: float,
                          alpha1: float, f_coeff: float) -> float:
    """Smallest sigma^2 with  sigma^2 >= max(2L/eps1 (f(2) + 2(2 rho + 2)/alpha), 2L/alpha1)."""
    if not eps1 > 0:
        raise CalibrationError("eps1 must be positive")
    f2 = 2.0 * f_coeff
    return max(2.0 * L / eps1 * (f2 + 2.0 * (2.0 * hess_rank + 2.0) / alpha), 2.0 * L / alpha1)


def gaussian_release_scale(tau: float, alpha: float, sigma2: float, beta: float,
                           eta: float, eps2: float, delta2: float) -> float:
    """sigma~ = (sqrt(2 tau / (alpha sigma^2)) + beta eta / alpha) (2/eps2) sqrt(2 ln(1.25/delta2))."""
    if not eps2 > 0:
        raise CalibrationError("Gaussian release needs eps2 > 0")
    if not delta2 > 0:
        raise CalibrationError("Gaussian release needs delta2 > 0")
    if math.isinf(beta):
        raise CalibrationError("delta4 must be positive for the Gaussian release")
    sens = math.sqrt(2.0 * tau / (alpha * sigma2)) + beta * eta / alpha
    return sens * (2.0 / eps2) * math.sqrt(2.0 * math.log(1.25 / delta2))


def calibrate_qop(L: float, hess_rank: int, split: BudgetSplit, constants: RmtConstants,
                  tau: float = 0.0, eta: float = 0.0) -> QopCalibration:
    if tau < 0 or eta < 0:
        raise CalibrationError("tau and eta must be nonnegative")
    sigma2 = curvature_noise_scale(L, hess_rank, split.eps1, constants.alpha,
                                   constants.alpha1, constants.f_coeff)
    if split.eps2 == 0:
        if tau > 0 or eta > 0:
            raise CalibrationError("approximate solve requires eps2 > 0")
        sigma_tilde = 0.0
    else:
        sigma_tilde = gaussian_release_scale(tau, constants.alpha, sigma2, constants.beta,
                                             eta, split.eps2, split.deltas.delta2)
    return QopCalibration(sigma2, sigma_tilde, constants, tau, eta)


def calibrate_lop(L: float, zeta: float, budget: PrivacyBudget) -> LopCalibration:
    """Equality calibration sigma^2 = zeta^2 (8 ln(2/delta) + 4 eps) / eps^2, Delta = 2L/eps."""
    if not zeta > 0:
        raise CalibrationError("zeta must be positive")
    eps, delta = budget.epsilon, budget.delta
    sigma2 = zeta**2 * (8.0 * math.log(2.0 / delta) + 4.0 * eps) / eps**2
    return LopCalibration(sigma2, 2.0 * L / eps, zeta)


# -- perturbed objectives -------------------------------------------------------

def lasso_objective(problem: LassoProblem) -> CompositeObjective:
    """The unperturbed problem as a solver handle."""
    X, y, n = problem.data.X, problem.data.y, problem.n

    def point_grad(theta, i):
        x = X[i]
        return (x @ theta - y[i]) * x

    def smooth_value(theta):
        r = X @ theta - y
        return 0.5 * float(r @ r)

    return CompositeObjective(
        n=n, d=problem.d, point_grad=point_grad, smooth_grad=problem.loss_grad_sum,
        lipschitz=eig_extremes(problem.gram)[1], omega=problem.omega,
        kappa=problem.kappa, smooth_value=smooth_value,
    )


def qop_objective(problem: LassoProblem, center: np.ndarray, sigma2: float,
                  W: np.ndarray) -> CompositeObjective:
    """Per-point term l(theta; z_i) + sigma^2/(2n) (theta - c)^T W (theta - c)."""
    if sigma2 == 0:
        return lasso_objective(problem)
    X, y, n = problem.data.X, problem.data.y, problem.n
    SW = sigma2 * np.asarray(W, dtype=float)
    c = np.asarray(center, dtype=float)

    def point_grad(theta, i):
        x = X[i]
        return (x @ theta - y[i]) * x + (SW @ (theta - c)) / n

    def smooth_grad(theta):
        return X.T @ (X @ theta - y) + SW @ (theta - c)

    def smooth_value(theta):
        r = X @ theta - y
        v = theta - c
        return 0.5 * float(r @ r) + 0.5 * float(v @ SW @ v)

    return CompositeObjective(
        n=n, d=problem.d, point_grad=point_grad, smooth_grad=smooth_grad,
        lipschitz=eig_extremes(problem.gram + SW)[1], omega=problem.omega,
        kappa=problem.kappa, smooth_value=smooth_value,
    )


def lop_objective(problem: LassoProblem, a: np.ndarray, Delta: float,
                  clip: Optional[float] = None) -> CompositeObjective:
    """Per-point term (clipped) l(theta; z_i) + (a^T theta + Delta/2 ||theta||^2) / n."""
    X, y, n = problem.data.X, problem.data.y, problem.n
    a = np.asarray(a, dtype=float)
    linear = Delta != 0 or bool(np.any(a))
    if clip is not None and clip <= 0:
        raise ValueError("clip threshold must be positive")

    def loss_grad(theta, i):
        x = X[i]
        g = (x @ theta - y[i]) * x
        return g if clip is None else clip_vector(g, clip)

    def point_grad(theta, i):
        g = loss_grad(theta, i)
        return g + (a + Delta * theta) / n if linear else g

    def smooth_grad(theta):
        if clip is None:
            g = X.T @ (X @ theta - y)
        else:
            g = np.sum([loss_grad(theta, i) for i in range(n)], axis=0)
        return g + a + Delta * theta if linear else g

    smooth_value = None
    if clip is None:
        def smooth_value(theta):
            r = X @ theta - y
            return 0.5 * float(r @ r) + float(a @ theta) + 0.5 * Delta * float(theta @ theta)

    return CompositeObjective(
        n=n, d=problem.d, point_grad=point_grad, smooth_grad=smooth_grad,
        lipschitz=eig_extremes(problem.gram)[1] + Delta, omega=problem.omega,
        kappa=problem.kappa, smooth_value=smooth_value,
    )


# -- mechanisms -------------------------------------------------------------------

def run_qop(problem: LassoProblem, anchor: Anchor, calib: QopCalibration, spec: WishartSpec,
            solver_cfg: SolverConfig, rng: np.random.Generator,
            gaussian_release: bool = True) -> MechanismOutput:
    """Draw W then b from ``rng``, solve approximately, release theta + b.

    ``gaussian_release=False`` skips b (used by the benchmark, where the
    release noise is common to both mechanisms).
    """
    if spec.d != problem.d:
        raise ValueError("Wishart dimension does not match the problem")
    W = sample_wishart(spec, rng)
    b = None
    if gaussian_release and calib.sigma_tilde > 0:
        b = calib.sigma_tilde * rng.standard_normal(problem.d)
    objective = qop_objective(problem, anchor.theta_tilde_star, calib.sigma2, W)
    start = time.perf_counter()
    result = stotos(objective, solver_cfg)
    elapsed = time.perf_counter() - start
    theta_final = result.theta if b is None else result.theta + b
    return MechanismOutput(theta_final, {
        "mechanism": "qop",
        "empirical_risk": problem.empirical_objective(theta_final),
        "solver_residual": result.stationarity_residual,
        "wall_time_seconds": elapsed,
        "seed": solver_cfg.seed,
        "sigma2": calib.sigma2,
        "sigma_tilde": calib.sigma_tilde if gaussian_release else 0.0,
    })


def run_lop(problem: LassoProblem, calib: LopCalibration, solver_cfg: SolverConfig,
            rng: np.random.Generator, clip: Optional[float] = None) -> MechanismOutput:
    a = math.sqrt(calib.sigma2) * rng.standard_normal(problem.d)
    objective = lop_objective(problem, a, calib.Delta, clip)
    start = time.perf_counter()
    result = stotos(objective, solver_cfg)
    elapsed = time.perf_counter() - start
    return MechanismOutput(result.theta, {
        "mechanism": "lop" if clip is None else "lop_clip",
        "empirical_risk": problem.empirical_objective(result.theta),
        "solver_residual": result.stationarity_residual,
        "wall_time_seconds": elapsed,
        "seed": solver_cfg.seed,
        "sigma2": calib.sigma2,
        "Delta": calib.Delta,
    })


def interpolation_diagnostic(problem: LassoProblem, anchor: Anchor, *,
                             unsafe_diagnostics: bool = False) -> dict:
    """Per-point losses at the anchor. Reads the private data and anchor directly."""
    if not unsafe_diagnostics:
        raise PermissionError("interpolation diagnostic is non-private; pass unsafe_diagnostics=True")
    losses = problem.losses(anchor.theta_tilde_star)
    return {"min_point_loss": float(losses.min()), "max_point_loss": float(losses.max())}
