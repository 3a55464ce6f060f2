"""System parameters, power grids, the finite-blocklength SINR threshold at Bob,
and Rayleigh block-fading outage probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import inv_qfunc

__all__ = [
    "SystemParams",
    "PowerPair",
    "PowerGrid",
    "InfeasibleRateError",
    "grid_levels",
    "sinr_threshold",
    "outage_pure",
    "outage_table",
    "outage_mixed",
    "outage_feasible_set",
]

_LN2 = math.log(2.0)


class InfeasibleRateError(ValueError):
    """No SINR threshold inside the search bracket supports the requested rate."""


@dataclass(frozen=True)
class SystemParams:
    """Block-level system parameters.

    n_uses: channel uses per block; sigma_b2 / sigma_w2: receiver and sensor
    noise variances (mW); rate_target: bits per channel use; upsilon: decoding
    error probability; alpha / beta: utility weights for sensor deployment
    cost and detection error.
    """

    n_uses: int
    sigma_b2: float
    sigma_w2: float
    rate_target: float
    upsilon: float
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.n_uses, int) or isinstance(self.n_uses, bool) or self.n_uses < 1:
            raise ValueError(f"n_uses must be a positive integer, got {self.n_uses!r}")
        for name in ("sigma_b2", "sigma_w2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be a positive finite real, got {v!r}")
        if not math.isfinite(self.rate_target) or self.rate_target <= 0.0:
            raise ValueError(f"rate_target must be positive, got {self.rate_target!r}")
        if not 0.0 < self.upsilon < 1.0:
            raise ValueError(f"upsilon must lie strictly in (0, 1), got {self.upsilon!r}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be a non-negative finite real, got {v!r}")


@dataclass(frozen=True)
class PowerPair:
    """One transmit/jamming power realization (mW)."""

    p_a: float
    p_j: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.p_a) or self.p_a <= 0.0:
            raise ValueError(f"p_a must be a positive finite real, got {self.p_a!r}")
        if not math.isfinite(self.p_j) or self.p_j < 0.0:
            raise ValueError(f"p_j must be a non-negative finite real, got {self.p_j!r}")


def grid_levels(lo: float, hi: float, spacing: float) -> tuple[float, ...]:
    """Inclusive arithmetic grid generated by index arithmetic (no accumulation)."""
    if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(spacing)):
        raise ValueError("grid bounds and spacing must be finite")
    if spacing <= 0.0:
        raise ValueError(f"grid spacing must be positive, got {spacing!r}")
    if hi < lo:
        raise ValueError(f"grid upper bound {hi!r} below lower bound {lo!r}")
    count = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
    return tuple(lo + k * spacing for k in range(count))


def _check_levels(levels: tuple[float, ...], name: str) -> None:
    if len(levels) < 1:
        raise ValueError(f"{name} must be nonempty")
    prev = 0.0
    for v in levels:
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError(f"{name} must be positive finite reals, got {v!r}")
        if v <= prev:
            raise ValueError(f"{name} must be strictly increasing")
        prev = v


@dataclass(frozen=True)
class PowerGrid:
    """Discrete transmit-power levels for Alice and the Jammer (mW)."""

    alice_levels: tuple[float, ...]
    jammer_levels: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice_levels", tuple(float(v) for v in self.alice_levels))
        object.__setattr__(self, "jammer_levels", tuple(float(v) for v in self.jammer_levels))
        _check_levels(self.alice_levels, "alice_levels")
        _check_levels(self.jammer_levels, "jammer_levels")

    @classmethod
    def from_ranges(
        cls,
        alice: tuple[float, float, float],
        jammer: tuple[float, float, float],
    ) -> "PowerGrid":
        return cls(grid_levels(*alice), grid_levels(*jammer))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alice_levels), len(self.jammer_levels)

    def pair(self, i: int, j: int) -> PowerPair:
        return PowerPair(self.alice_levels[i], self.jammer_levels[j])


def sinr_threshold(params: SystemParams) -> float:
    """SINR threshold tau supporting the target rate at blocklength n_uses.

    Solves R_T = log2(1 + tau) - Qinv(upsilon) / (sqrt(N) * (1 + tau) * ln 2)
    by bisection on [1e-9, 1e6]; the residual of the returned root is <= 1e-9.
    """
    qv = inv_qfunc(params.upsilon)
    sqrt_n = math.sqrt(params.n_uses)

    def residual(tau: float) -> float:
        return math.log2(1.0 + tau) - qv / (sqrt_n * (1.0 + tau) * _LN2) - params.rate_target

    lo, hi = 1e-9, 1e6
    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if not (r_lo < 0.0 < r_hi):
        raise InfeasibleRateError(
            f"no SINR threshold in ({lo:g}, {hi:g}) attains rate {params.rate_target} "
            f"at n_uses={params.n_uses}, upsilon={params.upsilon}"
        )
    while hi - lo > 1e-12 * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def outage_pure(pair: PowerPair, tau: float, sigma_b2: float) -> float:
    """Outage probability for one power pair under unit-mean Rayleigh fading:
    1 - exp(-tau*sigma_b2/P_A) / (1 + tau*P_J/P_A)."""
    if not math.isfinite(tau) or tau <= 0.0:
        raise ValueError(f"tau must be a positive finite real, got {tau!r}")
    if not math.isfinite(sigma_b2) or sigma_b2 <= 0.0:
        raise ValueError(f"sigma_b2 must be a positive finite real, got {sigma_b2!r}")
    return 1.0 - math.exp(-tau * sigma_b2 / pair.p_a) / (1.0 + tau * pair.p_j / pair.p_a)


def outage_table(grid: PowerGrid, tau: float, sigma_b2: float) -> np.ndarray:
    """Outage probability for every (alice, jammer) grid pair, shape (I, J)."""
    if tau <= 0.0 or sigma_b2 <= 0.0:
        raise ValueError("tau and sigma_b2 must be positive")
    pa = np.asarray(grid.alice_levels, dtype=float)[:, None]
    pj = np.asarray(grid.jammer_levels, dtype=float)[None, :]
    return 1.0 - np.exp(-tau * sigma_b2 / pa) / (1.0 + tau * pj / pa)


def _strategy_probs(strategy, grid: PowerGrid) -> np.ndarray:
    probs = np.asarray(getattr(strategy, "probs", strategy), dtype=float)
    if probs.shape != grid.shape:
        raise ValueError(
            f"strategy shape {probs.shape} does not match grid shape {grid.shape}"
        )
    return probs


def outage_mixed(strategy, grid: PowerGrid, tau: float, sigma_b2: float) -> float:
    """Outage probability averaged over a joint power-selection distribution."""
    probs = _strategy_probs(strategy, grid)
    return float(np.sum(probs * outage_table(grid, tau, sigma_b2)))


def outage_feasible_set(
    grid: PowerGrid, tau: float, sigma_b2: float, target: float
) -> set[tuple[int, int]]:
    """All grid index pairs whose pure outage probability is <= target."""
    if not 0.0 < target < 1.0:
        raise ValueError(f"outage target must lie strictly in (0, 1), got {target!r}")
    table = outage_table(grid, tau, sigma_b2)
    ii, jj = np.nonzero(table <= target)
    return {(int(i), int(j)) for i, j in zip(ii, jj)}
