"""Soft-fusion detection error probabilities and the closed-form optimal threshold.

The fusion statistic is the mean of W*N per-sensor energy samples. Conditioned
on the powers, each sample is exponential, so the statistic is Gamma(W*N)
distributed under both hypotheses with means mu0 = sigma_w2 + P_J (quiet) and
mu1 = mu0 + P_A (transmitting):

    P_FA(W, t) = Q(W*N, W*N*t / mu0)        P_MD(W, t) = P(W*N, W*N*t / mu1)

with Q and P the regularized upper/lower incomplete Gamma functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .specfun import ln_gamma, log_reg_lower_gamma, log_reg_upper_gamma
from .system import PowerGrid, PowerPair, SystemParams, grid_levels

__all__ = [
    "FcAction",
    "FcActionSpace",
    "HypothesisMeans",
    "pfa_pure",
    "pmd_pure",
    "error_sum_pure",
    "error_sum_curve",
    "log_error_sum_curve",
    "argmin_threshold",
    "optimal_threshold",
    "error_derivative",
    "detection_tables",
    "detection_tables_compact",
    "pfa_avg",
    "pmd_avg",
]

# below this, linear-domain error sums are at risk of hitting the subnormal
# range and the log-domain evaluation takes over
_LINEAR_FLOOR = 1e-290


@dataclass(frozen=True)
class FcAction:
    """One detector configuration: active sensor count and threshold (mW)."""

    w: int
    t: float

    def __post_init__(self) -> None:
        if not isinstance(self.w, int) or isinstance(self.w, bool) or self.w < 1:
            raise ValueError(f"w must be a positive integer, got {self.w!r}")
        if not math.isfinite(self.t) or self.t <= 0.0:
            raise ValueError(f"t must be a positive finite real, got {self.t!r}")


@dataclass(frozen=True)
class FcActionSpace:
    """Cartesian action space: sensor counts crossed with a threshold grid.

    Flat action index k = w_index * len(thresholds) + threshold_index.
    """

    w_set: tuple[int, ...]
    thresholds: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "w_set", tuple(int(w) for w in self.w_set))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if not self.w_set or not self.thresholds:
            raise ValueError("w_set and thresholds must be nonempty")
        prev = 0
        for w in self.w_set:
            if w < 1 or w <= prev:
                raise ValueError("w_set must be strictly increasing positive integers")
            prev = w
        prev_t = 0.0
        for t in self.thresholds:
            if not math.isfinite(t) or t <= 0.0 or t <= prev_t:
                raise ValueError("thresholds must be strictly increasing positive reals")
            prev_t = t

    @classmethod
    def from_ranges(
        cls, w_set: tuple[int, ...], thresholds: tuple[float, float, float]
    ) -> "FcActionSpace":
        return cls(tuple(w_set), grid_levels(*thresholds))

    @property
    def size(self) -> int:
        return len(self.w_set) * len(self.thresholds)

    def action(self, k: int) -> FcAction:
        m = len(self.thresholds)
        return FcAction(self.w_set[k // m], self.thresholds[k % m])


@dataclass(frozen=True)
class HypothesisMeans:
    """Means of the normalized fusion statistic under the two hypotheses."""

    mu0: float
    mu1: float

    def __post_init__(self) -> None:
        if not (0.0 < self.mu0 < self.mu1):
            raise ValueError(f"need mu1 > mu0 > 0, got mu0={self.mu0!r}, mu1={self.mu1!r}")

    @classmethod
    def for_pair(cls, pair: PowerPair, sigma_w2: float) -> "HypothesisMeans":
        if sigma_w2 <= 0.0:
            raise ValueError(f"sigma_w2 must be positive, got {sigma_w2!r}")
        mu0 = sigma_w2 + pair.p_j
        return cls(mu0, mu0 + pair.p_a)


def pfa_pure(p_j: float, w: int, t: float, n_uses: int, sigma_w2: float) -> float:
    """False-alarm probability Q(W*N, W*N*t / (sigma_w2 + P_J))."""
    shape = w * n_uses
    return float(_sp.gammaincc(shape, shape * t / (sigma_w2 + p_j)))


def pmd_pure(p_a: float, p_j: float, w: int, t: float, n_uses: int, sigma_w2: float) -> float:
    """Missed-detection probability 1 - Q(W*N, W*N*t / (sigma_w2 + P_J + P_A)),
    computed as the regularized lower Gamma to avoid cancellation."""
    shape = w * n_uses
    return float(_sp.gammainc(shape, shape * t / (sigma_w2 + p_j + p_a)))


def error_sum_pure(pair: PowerPair, action: FcAction, params: SystemParams) -> float:
    """Total conditional detection error P_FA + P_MD for one pair and action."""
    return pfa_pure(pair.p_j, action.w, action.t, params.n_uses, params.sigma_w2) + pmd_pure(
        pair.p_a, pair.p_j, action.w, action.t, params.n_uses, params.sigma_w2
    )


def error_sum_curve(
    pair: PowerPair, w: int, n_uses: int, sigma_w2: float, thresholds
) -> np.ndarray:
    """Vectorized P_FA + P_MD over a threshold array."""
    t = np.asarray(thresholds, dtype=float)
    means = HypothesisMeans.for_pair(pair, sigma_w2)
    shape = w * n_uses
    return _sp.gammaincc(shape, shape * t / means.mu0) + _sp.gammainc(
        shape, shape * t / means.mu1
    )


def log_error_sum_curve(
    pair: PowerPair, w: int, n_uses: int, sigma_w2: float, thresholds
) -> np.ndarray:
    """ln(P_FA + P_MD) over a threshold array, stable where the linear values
    underflow (W*N in the thousands makes the error sum drop below 1e-300
    near its minimum)."""
    t = np.asarray(thresholds, dtype=float)
    linear = error_sum_curve(pair, w, n_uses, sigma_w2, t)
    out = np.full(t.shape, -np.inf)
    healthy = linear > _LINEAR_FLOOR
    out[healthy] = np.log(linear[healthy])
    if not healthy.all():
        means = HypothesisMeans.for_pair(pair, sigma_w2)
        shape = float(w * n_uses)
        for idx in np.nonzero(~healthy)[0]:
            ti = float(t[idx])
            la = log_reg_upper_gamma(shape, shape * ti / means.mu0)
            lb = log_reg_lower_gamma(shape, shape * ti / means.mu1)
            out[idx] = np.logaddexp(la, lb)
    return out


def argmin_threshold(
    pair: PowerPair, w: int, n_uses: int, sigma_w2: float, thresholds
) -> int:
    """Index of the grid threshold minimizing the conditional error sum.

    Comparison happens in log space so extreme shapes do not collapse into
    underflow plateaus; exact ties resolve to the smallest threshold.
    """
    return int(np.argmin(log_error_sum_curve(pair, w, n_uses, sigma_w2, thresholds)))


def optimal_threshold(pair: PowerPair, sigma_w2: float) -> float:
    """Threshold minimizing P_FA + P_MD: mu0*mu1*ln(mu1/mu0) / P_A.

    Independent of the sensor count, and strictly between mu0 and mu1.
    """
    means = HypothesisMeans.for_pair(pair, sigma_w2)
    return means.mu0 * means.mu1 * math.log(means.mu1 / means.mu0) / pair.p_a


def error_derivative(
    t: float, pair: PowerPair, w: int, n_uses: int, sigma_w2: float
) -> float:
    """Analytic d/dt of the conditional error sum, 1/Gamma(W*N) factor included.

    With a = W*N/mu0 and b = W*N/mu1 the derivative is
    (b*(b*t)^(WN-1)*exp(-b*t) - a*(a*t)^(WN-1)*exp(-a*t)) / Gamma(WN);
    both terms are assembled as exp(log-numerator - ln_gamma(WN)) so the
    expression survives shapes up to W*N ~ 13000 without overflow.
    """
    if not math.isfinite(t) or t <= 0.0:
        raise ValueError(f"t must be a positive finite real, got {t!r}")
    means = HypothesisMeans.for_pair(pair, sigma_w2)
    shape = float(w * n_uses)
    lg = ln_gamma(shape)
    a = shape / means.mu0
    b = shape / means.mu1
    log_a = math.log(a) + (shape - 1.0) * math.log(a * t) - a * t - lg
    log_b = math.log(b) + (shape - 1.0) * math.log(b * t) - b * t - lg
    if log_a == log_b:
        return 0.0
    hi, lo = (log_b, log_a) if log_b > log_a else (log_a, log_b)
    magnitude = math.exp(hi) * (-math.expm1(lo - hi))
    return magnitude if log_b > log_a else -magnitude


def detection_tables_compact(
    grid: PowerGrid, space: FcActionSpace, n_uses: int, sigma_w2: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deduplicated per-action error tables over the power grid.

    Returns (pfa, pmd_unique, row_map): pfa has shape (J, K) since false
    alarms depend only on the jamming level; pmd_unique has shape (U, K) with
    one row per distinct H1 mean, and row_map maps flattened pair index
    r = i*J + j to its row of pmd_unique. Column k follows the FcActionSpace
    flat index.
    """
    m = len(space.thresholds)
    w_flat = np.repeat(np.asarray(space.w_set, dtype=float), m)
    t_flat = np.tile(np.asarray(space.thresholds, dtype=float), len(space.w_set))
    shape = w_flat * n_uses
    scaled = shape * t_flat  # (K,)

    mu0 = sigma_w2 + np.asarray(grid.jammer_levels, dtype=float)  # (J,)
    pfa = _sp.gammaincc(shape[None, :], scaled[None, :] / mu0[:, None])

    pa = np.asarray(grid.alice_levels, dtype=float)
    pj = np.asarray(grid.jammer_levels, dtype=float)
    mu1 = (sigma_w2 + pa[:, None] + pj[None, :]).ravel()
    uniq, row_map = np.unique(mu1, return_inverse=True)
    pmd_unique = _sp.gammainc(shape[None, :], scaled[None, :] / uniq[:, None])
    return pfa, pmd_unique, row_map.ravel()


def detection_tables(
    grid: PowerGrid, space: FcActionSpace, n_uses: int, sigma_w2: float
) -> tuple[np.ndarray, np.ndarray]:
    """Expanded per-action error tables: (pfa (J, K), pmd (I*J, K))."""
    pfa, pmd_unique, row_map = detection_tables_compact(grid, space, n_uses, sigma_w2)
    return pfa, pmd_unique[row_map]


def _fc_flat_probs(fc_strategy, space: FcActionSpace) -> np.ndarray:
    probs = np.asarray(getattr(fc_strategy, "probs", fc_strategy), dtype=float)
    expected = (len(space.w_set), len(space.thresholds))
    if probs.shape != expected:
        raise ValueError(f"FC strategy shape {probs.shape} does not match space {expected}")
    return probs.ravel()


def pfa_avg(
    aj_strategy,
    fc_strategy,
    grid: PowerGrid,
    space: FcActionSpace,
    params: SystemParams,
) -> float:
    """False-alarm probability averaged over both mixed strategies."""
    from .system import _strategy_probs

    aj = _strategy_probs(aj_strategy, grid)
    fc = _fc_flat_probs(fc_strategy, space)
    pfa, _ = detection_tables(grid, space, params.n_uses, params.sigma_w2)
    j_marginal = aj.sum(axis=0)  # false alarms do not involve the alice power
    return float(j_marginal @ pfa @ fc)


def pmd_avg(
    aj_strategy,
    fc_strategy,
    grid: PowerGrid,
    space: FcActionSpace,
    params: SystemParams,
) -> float:
    """Missed-detection probability averaged over both mixed strategies."""
    from .system import _strategy_probs

    aj = _strategy_probs(aj_strategy, grid)
    fc = _fc_flat_probs(fc_strategy, space)
    _, pmd_unique, row_map = detection_tables_compact(
        grid, space, params.n_uses, params.sigma_w2
    )
    mean_weights = np.bincount(row_map, weights=aj.ravel(), minlength=pmd_unique.shape[0])
    return float(mean_weights @ pmd_unique @ fc)
