"""Numerically stable special functions underlying every probability in the model.

Probability-valued forms delegate to scipy.special (cephes / boost backends).
Log-domain forms use the classical series / continued-fraction split at
``x ~ a + 1`` so that Gamma shapes as large as W*N ~ 13000 keep usable sign and
magnitude information in regimes where the linear-domain tail probabilities
underflow double precision.
"""

from __future__ import annotations

import math

from scipy import special as _sp

__all__ = [
    "ln_gamma",
    "reg_upper_gamma",
    "reg_lower_gamma",
    "log_reg_upper_gamma",
    "log_reg_lower_gamma",
    "inv_qfunc",
]

_MAX_SERIES_ITER = 20_000


def _check_shape(a: float, fn: str) -> float:
    a = float(a)
    if not math.isfinite(a) or a <= 0.0:
        raise ValueError(f"{fn}: shape must be a positive finite real, got {a!r}")
    return a


def _check_arg(x: float, fn: str) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"{fn}: argument must be a non-negative finite real, got {x!r}")
    return x


def ln_gamma(a: float) -> float:
    """Natural logarithm of the Gamma function for a > 0."""
    a = _check_shape(a, "ln_gamma")
    return float(_sp.gammaln(a))


def reg_upper_gamma(a: float, x: float) -> float:
    """Regularized upper incomplete Gamma Q(a, x) = Gamma(a, x) / Gamma(a)."""
    a = _check_shape(a, "reg_upper_gamma")
    x = _check_arg(x, "reg_upper_gamma")
    return float(_sp.gammaincc(a, x))


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete Gamma P(a, x) = 1 - Q(a, x)."""
    a = _check_shape(a, "reg_lower_gamma")
    x = _check_arg(x, "reg_lower_gamma")
    return float(_sp.gammainc(a, x))


def _log_lower_series(a: float, x: float) -> float:
    """ln P(a, x) via the ascending series; converges for x < a + 1.

    P(a, x) = exp(a*ln x - x - lnGamma(a)) * sum, with
    sum = (1/a) * (1 + x/(a+1) + x^2/((a+1)(a+2)) + ...).
    """
    ap = a
    delt = 1.0 / a
    total = delt
    for _ in range(_MAX_SERIES_ITER):
        ap += 1.0
        delt *= x / ap
        total += delt
        if abs(delt) < abs(total) * 1e-17:
            break
    else:
        raise RuntimeError(f"lower-gamma series failed to converge for a={a}, x={x}")
    return a * math.log(x) - x - float(_sp.gammaln(a)) + math.log(total)


def _log_upper_cf(a: float, x: float) -> float:
    """ln Q(a, x) via the Lentz continued fraction; converges for x > a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_SERIES_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delt = d * c
        h *= delt
        if abs(delt - 1.0) < 1e-17:
            break
    else:
        raise RuntimeError(f"upper-gamma continued fraction failed for a={a}, x={x}")
    return a * math.log(x) - x - float(_sp.gammaln(a)) + math.log(h)


def log_reg_lower_gamma(a: float, x: float) -> float:
    """ln P(a, x), exact in log space; finite for any x > 0 where P underflows."""
    a = _check_shape(a, "log_reg_lower_gamma")
    x = _check_arg(x, "log_reg_lower_gamma")
    if x == 0.0:
        return -math.inf
    if x < a + 1.0:
        return _log_lower_series(a, x)
    # upper tail is the small quantity here
    return math.log1p(-math.exp(_log_upper_cf(a, x)))


def log_reg_upper_gamma(a: float, x: float) -> float:
    """ln Q(a, x), exact in log space; finite for any finite x where Q underflows."""
    a = _check_shape(a, "log_reg_upper_gamma")
    x = _check_arg(x, "log_reg_upper_gamma")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return math.log1p(-math.exp(_log_lower_series(a, x)))
    return _log_upper_cf(a, x)


def inv_qfunc(p: float) -> float:
    """Inverse of the standard-normal tail: returns z with Q(z) = p, 0 < p < 1."""
    p = float(p)
    if not math.isfinite(p) or not 0.0 < p < 1.0:
        raise ValueError(f"inv_qfunc: probability must lie strictly in (0, 1), got {p!r}")
    return float(-_sp.ndtri(p))
