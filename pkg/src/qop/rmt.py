"""Wishart perturbations and the random-matrix constants used for calibration.

W = G G^T with G a d x m matrix of i.i.d. standard normals. The constants
(alpha, alpha1, beta, f, mu, D) certify the eigenvalue and density-ratio
conditions the privacy calibration relies on; they are set at equality, i.e.
at the tightest values the tail bounds allow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import (
    inverse_lower_incomplete_gamma,
    log_lower_incomplete_gamma,
)


class InfeasibleSplitError(ValueError):
    """A failure-probability split admits no valid constants."""

    def __init__(self, component: str, message: str):
        super().__init__(f"{component}: {message}")
        self.component = component


def sym_matrix(entries) -> np.ndarray:
    """Validate a square finite matrix and return its exact symmetrisation.

    ``(A + A^T) / 2`` is bit-symmetric because float addition commutes.
    """
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class WishartSpec:
    d: int
    m: float  # integral for sampling; may be relaxed to a real > d for constants

    def __post_init__(self):
        if self.d < 1 or self.m <= 0:
            raise ValueError(f"invalid Wishart dimensions d={self.d}, m={self.m}")

    @property
    def shape(self) -> float:
        """p = (m - d + 1) / 2."""
        return 0.5 * (self.m - self.d + 1)


@dataclass(frozen=True)
class DeltaSplit:
    delta1: float
    delta2: float
    delta3: float
    delta4: float

    def __post_init__(self):
        parts = self.as_tuple()
        if any(not 0.0 <= v <= 1.0 for v in parts):
            raise ValueError(f"split components must lie in [0, 1], got {parts}")
        if sum(parts) > 1.0 + 1e-12:
            raise ValueError(f"split components sum to {sum(parts)} > 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.delta1, self.delta2, self.delta3, self.delta4)

    @property
    def total(self) -> float:
        return math.fsum(self.as_tuple())


@dataclass(frozen=True)
class RmtConstants:
    alpha: float
    alpha1: float
    beta: float  # +inf when delta4 == 0
    f_coeff: float
    mu: float
    bigD: float
    p: float
    source: WishartSpec
    split: DeltaSplit
    log_bigD: float = math.nan

    def f(self, rank: int) -> float:
        """Density-ratio slope f(rank) = f_coeff * rank."""
        return self.f_coeff * rank

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha1": self.alpha1,
            "beta": None if math.isinf(self.beta) else self.beta,
            "f_coeff": self.f_coeff,
            "mu": self.mu,
            "D": self.bigD,
            "log_D": self.log_bigD,
            "p": self.p,
            "d": self.source.d,
            "m": self.source.m,
            "delta_split": list(self.split.as_tuple()),
        }


# -- sampling and spectra -----------------------------------------------------

def sample_wishart(spec: WishartSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw W = G G^T.

    G is filled column-major from ``rng.standard_normal``: the first d draws
    form column 0, the next d draws column 1, and so on.
    """
    m = int(spec.m)
    if m != spec.m:
        raise ValueError(f"sampling needs an integral hidden dimension, got m={spec.m}")
    g = rng.standard_normal((m, spec.d)).T
    return sym_matrix(g @ g.T)


def sample_wishart_batch(spec: WishartSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws, stacked as (size, d, d), same fill order per draw."""
    m = int(spec.m)
    g = rng.standard_normal((size, m, spec.d)).transpose(0, 2, 1)
    w = g @ g.transpose(0, 2, 1)
    return 0.5 * (w + w.transpose(0, 2, 1))


def eig_extremes(w: np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix (dense LAPACK solve)."""
    ev = np.linalg.eigvalsh(w)
    return float(ev[0]), float(ev[-1])


def _log_multigamma(x: float, d: int) -> float:
    return d * (d - 1) / 4.0 * math.log(math.pi) + math.fsum(
        math.lgamma(x + (1 - i) / 2.0) for i in range(1, d + 1)
    )


def log_wishart_density(w: np.ndarray, spec: WishartSpec) -> float:
    """log q(W) for W ~ Wishart(d, m) with identity scale."""
    d, m = spec.d, spec.m
    if not m > d:
        raise ValueError(f"density needs m > d (got d={d}, m={m})")
    w = np.asarray(w, dtype=float)
    if w.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got {w.shape}")
    try:
        chol = np.linalg.cholesky(w)
    except np.linalg.LinAlgError as exc:
        raise ValueError("W is not positive definite") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return (
        -(m * d / 2.0) * math.log(2.0)
        - _log_multigamma(m / 2.0, d)
        + 0.5 * (m - d - 1) * logdet
        - 0.5 * float(np.trace(w))
    )


def largest_eig_tail(t: float, spec: WishartSpec) -> float:
    """Upper bound on P(lambda_max(W) >= t), clipped to [0, 1]."""
    edge = math.sqrt(spec.m) + math.sqrt(spec.d)
    if t < edge**2:
        return 1.0
    return min(1.0, 2.0 * math.exp(-0.5 * (math.sqrt(t) - edge) ** 2))


# -- constants ----------------------------------------------------------------

def log_density_constant(d: int, m: float) -> float:
    """log D for the smallest-eigenvalue density bound, via log-gamma sums."""
    return (
        math.log(d)
        + math.lgamma(1.5)
        + math.lgamma((m + 1) / 2.0)
        - math.lgamma(d / 2.0 + 1.0)
        - math.lgamma((m - d + 1) / 2.0)
        - math.lgamma((m - d + 2) / 2.0)
    )


def lambda_min_cdf_bound(s: float, spec: WishartSpec) -> float:
    """Upper bound D * gamma(s/2, p) on P(lambda_min(W) <= s)."""
    if s <= 0:
        return 0.0
    log_b = log_density_constant(spec.d, spec.m) + log_lower_incomplete_gamma(s / 2.0, spec.shape)
    return min(1.0, math.exp(log_b))


def compute_constants(spec: WishartSpec, split: DeltaSplit) -> RmtConstants:
    d, m = spec.d, float(spec.m)
    if not m > d:
        raise ValueError(f"constants need m > d (got d={d}, m={m})")
    if split.delta3 <= 0:
        raise InfeasibleSplitError("delta3", "must be positive (alpha would be 0)")
    if split.delta1 <= 0:
        raise InfeasibleSplitError("delta1", "must be positive (alpha1 would be 0)")
    p = spec.shape
    log_d = log_density_constant(d, m)
    lg = math.lgamma(p)

    log_t3 = math.log(split.delta3) - log_d
    if not log_t3 < lg:
        raise InfeasibleSplitError("delta3", "delta3 / D is not below Gamma(p)")
    alpha = 2.0 * inverse_lower_incomplete_gamma(0.0, p, log_y=log_t3)

    # delta1 (1 - delta3) / D + gamma(alpha / 2, p), summed in log space
    log_a = math.log(split.delta1) + math.log1p(-split.delta3) - log_d
    log_b = log_lower_incomplete_gamma(alpha / 2.0, p)
    hi, lo = max(log_a, log_b), min(log_a, log_b)
    log_t1 = hi + math.log1p(math.exp(lo - hi))
    if not log_t1 < lg:
        raise InfeasibleSplitError("delta1", "alpha1 inversion target is not below Gamma(p)")
    alpha1 = 2.0 * inverse_lower_incomplete_gamma(0.0, p, log_y=log_t1) - alpha
    if not (alpha > 0 and alpha1 > 0):
        raise InfeasibleSplitError("delta1", f"degenerate constants alpha={alpha}, alpha1={alpha1}")

    if split.delta4 > 0 and split.delta3 < 1:
        beta = (
            math.sqrt(2.0 * math.log(2.0 / (split.delta4 * (1.0 - split.delta3))))
            + math.sqrt(m)
            + math.sqrt(d)
        ) ** 2
    else:
        beta = math.inf

    return RmtConstants(
        alpha=alpha,
        alpha1=alpha1,
        beta=beta,
        f_coeff=(p - 1.0) / alpha + 0.5,
        mu=m,
        bigD=math.exp(log_d),
        p=p,
        source=spec,
        split=split,
        log_bigD=log_d,
    )
