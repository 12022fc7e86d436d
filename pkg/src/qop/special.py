"""Lower incomplete gamma function and its inverse, evaluated in log space.

The unnormalised lower incomplete gamma is

    gamma(x, p) = int_0^x t^(p-1) e^(-t) dt,

with the argument order (x, p). Shapes of order 50 and more arise for Wishart
matrices with m ~ 2d, so everything is carried as a logarithm and only
exponentiated at the public boundary.

Series / continued-fraction split follows the classical Numerical Recipes
scheme (series for x < p + 1, Lentz continued fraction otherwise).
"""
from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 10_000


def _check_shape(p: float) -> None:
    if not p > 0 or not math.isfinite(p):
        raise ValueError(f"shape p must be positive and finite, got {p!r}")


def _log_series(x: float, p: float) -> float:
    # log of sum_{k>=0} x^k / (p (p+1) ... (p+k))
    term = 1.0 / p
    total = term
    ap = p
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * _EPS:
            return math.log(total)
    raise ArithmeticError(f"gamma series did not converge (x={x}, p={p})")


def _log_upper_cf(x: float, p: float) -> float:
    # log of the continued fraction for Gamma(p, x) e^x x^(-p) (modified Lentz)
    b = x + 1.0 - p
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - p)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.log(h)
    raise ArithmeticError(f"gamma continued fraction did not converge (x={x}, p={p})")


def log_lower_incomplete_gamma(x: float, p: float) -> float:
    """Return log gamma(x, p); ``-inf`` at x = 0."""
    _check_shape(p)
    if x < 0 or math.isnan(x):
        raise ValueError(f"x must be nonnegative, got {x!r}")
    if x == 0:
        return -math.inf
    if math.isinf(x):
        return math.lgamma(p)
    prefix = -x + p * math.log(x)
    if x < p + 1.0:
        return prefix + _log_series(x, p)
    lg = math.lgamma(p)
    log_upper = prefix + _log_upper_cf(x, p)
    # gamma = Gamma(p) - Gamma(p, x), with Gamma(p, x) < Gamma(p)
    return lg + math.log1p(-math.exp(log_upper - lg))


def lower_incomplete_gamma(x: float, p: float) -> float:
    """Unnormalised lower incomplete gamma ``int_0^x t^(p-1) e^(-t) dt``.

    Overflows to ``inf`` only when the true value exceeds the double range;
    use :func:`log_lower_incomplete_gamma` for large shapes.
    """
    if p < 170.0 and math.isinf(x) and x > 0:
        return math.gamma(p)
    if p < 170.0 and x >= p + 1.0 and not math.isinf(x):
        # linear-space complement keeps the upper-tail digits near saturation
        return math.gamma(p) - math.exp(log_upper_incomplete_gamma(x, p))
    return math.exp(log_lower_incomplete_gamma(x, p))


def _initial_guess(log_y: float, p: float) -> float:
    """Starting point for the inversion, as log x."""
    # small-x asymptote gamma(x, p) ~ x^p / p
    candidates = [(log_y + math.log(p)) / p]
    if p > 1.0:
        # Wilson-Hilferty from a rational normal quantile (Numerical Recipes)
        log_frac = log_y - math.lgamma(p)
        lower_half = log_frac < -math.log(2.0)
        pp = math.exp(log_frac) if lower_half else -math.expm1(log_frac)
        t = math.sqrt(-2.0 * math.log(max(pp, 1e-300)))
        z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        if lower_half:
            z = -z
        wh = p * (1.0 - 1.0 / (9.0 * p) - z / (3.0 * math.sqrt(p))) ** 3
        if wh > 0:
            candidates.append(math.log(wh))
    if len(candidates) == 1:
        return candidates[0]

    def miss(u: float) -> float:
        return abs(log_lower_incomplete_gamma(math.exp(min(u, 700.0)), p) - log_y)

    return min(candidates, key=miss)


def log_upper_incomplete_gamma(x: float, p: float) -> float:
    """Return log Gamma(p, x) = log int_x^inf t^(p-1) e^(-t) dt."""
    _check_shape(p)
    if x < 0 or math.isnan(x):
        raise ValueError(f"x must be nonnegative, got {x!r}")
    if math.isinf(x):
        return -math.inf
    lg = math.lgamma(p)
    if x == 0:
        return lg
    prefix = -x + p * math.log(x)
    if x >= p + 1.0:
        return prefix + _log_upper_cf(x, p)
    log_lower = prefix + _log_series(x, p)
    return lg + math.log1p(-math.exp(log_lower - lg))


def _safeguarded_newton(residual, u0: float, increasing: bool, scale: float,
                        max_step: float) -> float:
    """Root of a monotone ``residual(u) -> (r, dr/du)`` by bracketed Newton."""
    u = u0
    lo, hi = -math.inf, math.inf
    for _ in range(300):
        r, slope = residual(u)
        if (r > 0) == increasing:
            hi = min(hi, u)
        else:
            lo = max(lo, u)
        if abs(r) <= 1e-15 * scale:
            return u
        if slope != 0 and math.isfinite(slope):
            step = r / slope
            step = max(min(step, max_step), -max_step)
            u_new = u - step
        else:
            u_new = math.nan
        if not (lo < u_new < hi):
            if math.isfinite(lo) and math.isfinite(hi):
                u_new = 0.5 * (lo + hi)
            elif math.isfinite(lo):
                u_new = lo + max_step
            else:
                u_new = hi - max_step
        if abs(u_new - u) <= 4e-16 * max(1.0, abs(u)):
            return u_new
        u = u_new
    if hi - lo < 1e-12 * max(1.0, abs(lo)):
        return 0.5 * (lo + hi)
    raise ArithmeticError("inverse incomplete gamma did not converge")


def inverse_lower_incomplete_gamma(y: float, p: float, *, log_y: float | None = None) -> float:
    """Solve ``gamma(x, p) = y`` for x.

    Either pass ``y`` directly or pass ``log_y`` (then ``y`` is ignored), which
    allows targets far outside the double range. Raises ``ValueError`` when the
    target is negative or not below ``Gamma(p)``.
    """
    _check_shape(p)
    if log_y is None:
        if y < 0 or math.isnan(y):
            raise ValueError(f"target must be nonnegative, got {y!r}")
        if y == 0:
            return 0.0
        log_y = math.log(y)
    elif log_y == -math.inf:
        return 0.0
    lg = math.lgamma(p)
    if y and p < 170.0 and y >= math.gamma(p):
        raise ValueError(f"target {y!r} is not below Gamma({p:.6g}) = {math.gamma(p)!r}")
    if not log_y < lg:
        raise ValueError(
            f"target exp({log_y:.6g}) is not below Gamma({p:.6g}) = exp({lg:.6g})"
        )

    if log_y > lg - 0.7 and p < 170.0 and y:
        # close to saturation: invert the upper tail Gamma(p) - y instead,
        # which keeps the digits the log form throws away
        comp = math.gamma(p) - y
        if comp > 0:
            log_c = math.log(comp)

            def upper(x: float) -> tuple[float, float]:
                x = max(x, 1e-300)
                g = log_upper_incomplete_gamma(x, p)
                return g - log_c, -math.exp((p - 1.0) * math.log(x) - x - g)

            x0 = max(math.exp(_initial_guess(log_y, p)), 1e-300)
            return _safeguarded_newton(upper, x0, increasing=False,
                                       scale=max(1.0, abs(log_c)), max_step=max(10.0, p))

    def lower(u: float) -> tuple[float, float]:
        u = min(u, 700.0)
        x = math.exp(u)
        if x < p + 1.0:
            # series in terms of u so that targets below the double range still resolve
            g = p * u - x + _log_series(x, p)
        else:
            g = log_lower_incomplete_gamma(x, p)
        # d/du log gamma(e^u, p) = x^p e^-x / gamma(x, p)
        return g - log_y, math.exp(p * math.log(x) - x - g)

    u = _safeguarded_newton(lower, _initial_guess(log_y, p), increasing=True,
                            scale=max(1.0, abs(log_y)), max_step=5.0)
    return math.exp(u)
