"""Utility (excess empirical risk) bounds and their numerical optimisation.

QOP, inexact solve:
    n d L sigma~^2 / 2 + G sqrt(d) sigma~ + tau + mu sigma^2 (dist_sq + eta^2)
QOP, exact solve (tau = eta = 0, eps2 = delta2 = delta4 = 0):
    mu sigma^2 / 2 * dist_sq
LOP:
    2 sigma^2 d / Delta + Delta / 2 * ||theta_ex||^2

The two QOP forms are evaluated as stated, each on its own path; note the
factor 2 between them on the overlap tau = eta = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .mechanisms import (
    BudgetSplit,
    PrivacyBudget,
    calibrate_lop,
    calibrate_qop,
)
from .rmt import DeltaSplit, WishartSpec, compute_constants

M_MARGIN = 1e-3


@dataclass(frozen=True)
class BoundInputs:
    L: float
    d: int
    n: int
    hess_rank: int
    G: float
    tau: float
    eta: float
    dist_sq: float  # ||theta_ex - theta*||^2 bound (||theta_ex||^2 for LOP)
    budget: PrivacyBudget
    zeta: Optional[float] = None  # LOP only

    def __post_init__(self):
        vals = (self.L, self.d, self.n, self.hess_rank, self.G, self.tau, self.eta, self.dist_sq)
        if any(v < 0 for v in vals):
            raise ValueError("bound inputs must be nonnegative")

    @property
    def exact(self) -> bool:
        return self.tau == 0 and self.eta == 0


@dataclass(frozen=True)
class FreeParams:
    split: BudgetSplit
    m_relaxed: float


def eval_qop_bound(inputs: BoundInputs, params: FreeParams) -> float:
    """Bound at the equality calibration; ``inf`` for infeasible parameters."""
    if not params.m_relaxed > inputs.d:
        return math.inf
    try:
        consts = compute_constants(WishartSpec(inputs.d, params.m_relaxed), params.split.deltas)
        calib = calibrate_qop(inputs.L, inputs.hess_rank, params.split, consts,
                              inputs.tau, inputs.eta)
    except (ValueError, ArithmeticError):
        # InfeasibleSplitError and CalibrationError are ValueErrors
        return math.inf
    value = qop_risk_bound(inputs, consts.mu, calib.sigma2, calib.sigma_tilde)
    return value if math.isfinite(value) else math.inf


def qop_risk_bound(inputs: BoundInputs, mu: float, sigma2: float, sigma_tilde: float) -> float:
    """The bound formula itself, for given noise scales."""
    if inputs.exact:
        return 0.5 * mu * sigma2 * inputs.dist_sq
    return (inputs.n * inputs.d * inputs.L * sigma_tilde**2 / 2.0
            + inputs.G * math.sqrt(inputs.d) * sigma_tilde
            + inputs.tau
            + mu * sigma2 * (inputs.dist_sq + inputs.eta**2))


def eval_lop_bound(inputs: BoundInputs, budget: Optional[PrivacyBudget] = None) -> float:
    if inputs.zeta is None:
        raise ValueError("LOP bound needs zeta")
    calib = calibrate_lop(inputs.L, inputs.zeta, budget or inputs.budget)
    return lop_risk_bound(calib.sigma2, inputs.d, calib.Delta, inputs.dist_sq)


def lop_risk_bound(sigma2: float, d: int, Delta: float, theta_ex_sq: float) -> float:
    return 2.0 * sigma2 * d / Delta + 0.5 * Delta * theta_ex_sq


# -- reparameterisation -----------------------------------------------------------

def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _logit(s: float) -> float:
    return math.log(s) - math.log1p(-s)


class Reparam:
    """Bijection between R^k and the open feasible box of free parameters.

    exact path   (k=2): (delta1 logit vs delta3, m logit)
    inexact path (k=5): (eps1 logit, three delta logits vs delta4, m logit)

    delta parts are a softmax with the last logit pinned at 0, scaled by delta;
    m = d + margin + span * sigmoid(.).
    """

    def __init__(self, inputs: BoundInputs, m_span: Optional[float] = None):
        self.inputs = inputs
        self.exact = inputs.exact
        self.m_lo = inputs.d + M_MARGIN
        self.m_span = m_span if m_span is not None else 100.0 * inputs.d
        self.dim = 2 if self.exact else 5

    def decode(self, z) -> FreeParams:
        z = [float(v) for v in z]
        eps, delta = self.inputs.budget.epsilon, self.inputs.budget.delta
        m = self.m_lo + self.m_span * _sigmoid(z[-1])
        if self.exact:
            d1 = delta * _sigmoid(z[0])
            split = BudgetSplit(eps, 0.0, DeltaSplit(d1, 0.0, delta - d1, 0.0))
            return FreeParams(split, m)
        eps1 = eps * _sigmoid(z[0])
        logits = np.array([z[1], z[2], z[3], 0.0])
        w = np.exp(logits - logits.max())
        w /= w.sum()
        parts = delta * w
        split = BudgetSplit(eps1, eps - eps1, DeltaSplit(*(float(v) for v in parts)))
        return FreeParams(split, m)

    def encode(self, params: FreeParams) -> np.ndarray:
        eps, delta = self.inputs.budget.epsilon, self.inputs.budget.delta
        v = _logit((params.m_relaxed - self.m_lo) / self.m_span)
        dl = params.split.deltas
        if self.exact:
            return np.array([_logit(dl.delta1 / delta), v])
        u0 = _logit(params.split.eps1 / eps)
        ref = math.log(dl.delta4)
        return np.array([u0, math.log(dl.delta1) - ref, math.log(dl.delta2) - ref,
                         math.log(dl.delta3) - ref, v])

    def starts(self) -> list[np.ndarray]:
        """Eight deterministic starting points spanning the corner regimes."""
        d = self.inputs.d
        out = []
        for share1 in (0.2, 0.8):  # delta mass on delta1 vs delta3
            for m_off in (0.5 * d, 2.0 * d, 8.0 * d, 30.0 * d):
                m = self.m_lo + min(m_off, 0.95 * self.m_span)
                v = _logit((m - self.m_lo) / self.m_span)
                if self.exact:
                    out.append(np.array([_logit(share1), v]))
                else:
                    # eps mostly on the curvature part; delta2, delta4 small
                    rest = 1.0 - 0.1
                    f = np.array([share1 * rest, 0.05, (1 - share1) * rest, 0.05])
                    lg = np.log(f / f[3])
                    out.append(np.array([_logit(0.9), lg[0], lg[1], lg[2], v]))
        return out


# -- optimisation -------------------------------------------------------------------

def nelder_mead(fun, x0, step: float = 0.5, xatol: float = 1e-10, fatol: float = 1e-12,
                maxiter: Optional[int] = None):
    """Nelder-Mead from the axis-aligned simplex ``x0 + step * e_i``."""
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0] + [x0 + step * e for e in np.eye(x0.size)])
    opts = {"initial_simplex": simplex, "xatol": xatol, "fatol": fatol}
    if maxiter is not None:
        opts["maxiter"] = maxiter
        opts["maxfev"] = 2 * maxiter
    return minimize(fun, x0, method="Nelder-Mead", options=opts)


@dataclass(frozen=True)
class BoundOptimum:
    params: FreeParams
    bound: float
    restarts_used: int  # restarts that ended at a finite value


def optimize_qop_bound(inputs: BoundInputs, restarts: int = 8,
                       maxiter: int = 2000, extra_starts=()) -> BoundOptimum:
    """Minimise the QOP bound over the free parameters (split, m) from fixed starts.

    ``extra_starts`` are additional FreeParams to start from (e.g. a
    neighbouring grid point's optimum).
    """
    rp = Reparam(inputs)

    def objective(z):
        val = eval_qop_bound(inputs, rp.decode(z))
        return math.log(val) if val > 0 and math.isfinite(val) else math.inf

    starts = rp.starts()[:restarts] + [rp.encode(p) for p in extra_starts]
    best_z, best_val, used = None, math.inf, 0
    for z0 in starts:
        if not math.isfinite(objective(z0)):
            continue
        res = nelder_mead(objective, z0, maxiter=maxiter)
        # restart once from the end point; NM stalls on the max(.,.) ridge
        res = nelder_mead(objective, res.x, step=0.1, maxiter=maxiter)
        if math.isfinite(res.fun):
            used += 1
            if res.fun < best_val:
                best_z, best_val = res.x, res.fun
    if best_z is None:
        raise RuntimeError("every restart was infeasible")
    params = rp.decode(best_z)
    return BoundOptimum(params, eval_qop_bound(inputs, params), used)


def figure1_inputs(epsilon: float, delta: float, exact: bool) -> BoundInputs:
    """Setting of the bound-optimisation figure: L=1, d=12, n=10, rho=1, G=1, dist_sq=1."""
    te = 0.0 if exact else 0.001
    return BoundInputs(L=1.0, d=12, n=10, hess_rank=1, G=1.0, tau=te, eta=te,
                       dist_sq=1.0, budget=PrivacyBudget(epsilon, delta))
