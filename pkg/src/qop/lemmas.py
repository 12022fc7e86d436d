"""Finite-dimensional linear-algebra facts behind the density-ratio argument.

These are exposed as plain functions so they can serve as property-test
oracles (and be driven from ``qop lemma-check``).
"""
from __future__ import annotations

import math

import numpy as np

_RANK_TOL = 1e-10


def numerical_rank(a: np.ndarray, tol: float = _RANK_TOL) -> int:
    s = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def op_norm(a: np.ndarray) -> float:
    return float(np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)[0])


def det_ratio_rank1(a: np.ndarray, e: np.ndarray) -> float:
    """det(A + E) / det(A) for rank(E) <= 1, as 1 + the nonzero eigenvalue of A^-1 E.

    For a rank-one matrix the only nonzero eigenvalue equals the trace.
    """
    a = np.asarray(a, dtype=float)
    e = np.asarray(e, dtype=float)
    if numerical_rank(e) > 1:
        raise ValueError("E must have rank at most 1")
    try:
        m = np.linalg.solve(a, e)
    except np.linalg.LinAlgError as exc:
        raise ValueError("A is singular") from exc
    if not np.all(np.isfinite(m)):
        raise ValueError("A is singular")
    return 1.0 + float(np.trace(m))


def low_rank_det_bound(a, e, alpha: float, L: float, r: int) -> tuple[float, float]:
    """Return (det(A+E)/det(A), exp(L r / alpha)); the first never exceeds the second.

    Preconditions are checked with a small relative slack and raise ``ValueError``.
    """
    a = np.asarray(a, dtype=float)
    e = np.asarray(e, dtype=float)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    ev_a = np.linalg.eigvalsh(a)
    if ev_a[0] < alpha * (1 - 1e-12):
        raise ValueError(f"lambda_min(A) = {ev_a[0]} is below alpha = {alpha}")
    ev_e = np.linalg.eigvalsh(e)
    if np.max(np.abs(ev_e), initial=0.0) > L * (1 + 1e-12) + 1e-15:
        raise ValueError("E has an eigenvalue larger than L in magnitude")
    if numerical_rank(e) > r:
        raise ValueError(f"rank(E) exceeds r = {r}")
    # det(I + A^{-1/2} E A^{-1/2}) through the symmetric congruence
    chol = np.linalg.cholesky(a)
    x = np.linalg.solve(chol, np.linalg.solve(chol, e).T)
    ratio = float(np.prod(1.0 + np.linalg.eigvalsh(0.5 * (x + x.T))))
    return ratio, math.exp(L * r / alpha)


def _projector(v: np.ndarray) -> np.ndarray:
    nv = float(v @ v)
    if nv == 0.0:
        return np.zeros((v.size, v.size))
    return np.outer(v, v) / nv


def build_rank2_coupling(u, b) -> np.ndarray:
    """Symmetric U with rank(U) <= 2, U b = u and ||U||_op = ||u|| / ||b||.

    With e = b/||b||, a = e.u and w = u - a e:
    U = (a (P_e - P_w) + e w^T + w e^T) / ||b||, where P_v = v v^T/||v||^2 (0 if v = 0).
    """
    u = np.asarray(u, dtype=float)
    b = np.asarray(b, dtype=float)
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        raise ValueError("b must be nonzero")
    e = b / nb
    a = float(e @ u)
    w = u - a * e
    if np.linalg.norm(w) <= 1e-15 * max(1.0, float(np.linalg.norm(u))):
        w = np.zeros_like(w)
    out = (a * (_projector(e) - _projector(w)) + np.outer(e, w) + np.outer(w, e)) / nb
    return 0.5 * (out + out.T)
