"""Constructive high-probability covertness guarantee.

For any finite detector strategy over (sensor count, threshold) pairs, a
Chebyshev concentration argument confines thresholds that could keep the total
detection error below 1 - epsilon to one interval per power pair. Power pairs
whose intervals are pairwise disjoint therefore defeat any single detector
action on all but at most one pair; randomizing uniformly over m such pairs
keeps the error sum above 1 - epsilon with probability at least 1 - 1/m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detection import FcAction, HypothesisMeans, error_sum_pure
from .system import PowerPair, SystemParams, outage_pure

__all__ = [
    "RobustInterval",
    "RobustnessPlan",
    "PlanInfeasibleError",
    "robust_interval",
    "minimum_separated_mu0",
    "construct_disjoint_pairs",
    "verify_interval_exclusion",
    "covertness_probability",
]


class PlanInfeasibleError(RuntimeError):
    """Power caps cannot accommodate the requested number of separated pairs.

    ``achievable_m`` reports how many pairs fit before the caps bind.
    """

    def __init__(self, message: str, achievable_m: int):
        super().__init__(message)
        self.achievable_m = achievable_m


@dataclass(frozen=True)
class RobustInterval:
    """Threshold interval outside which a pair's error sum is >= 1 - epsilon."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo < self.hi):
            raise ValueError(f"need 0 <= lo < hi, got [{self.lo!r}, {self.hi!r}]")

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi


@dataclass(frozen=True)
class RobustnessPlan:
    """Separated outage-feasible power pairs with their threshold intervals."""

    epsilon: float
    m: int
    w_min: int
    pairs: tuple[PowerPair, ...]
    intervals: tuple[RobustInterval, ...]
    n_uses: int
    sigma_w2: float
    tau: float
    sigma_b2: float
    outage_target: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie strictly in (0, 1), got {self.epsilon!r}")
        if self.m < 1 or len(self.pairs) != self.m or len(self.intervals) != self.m:
            raise ValueError("plan must hold exactly m pairs and m intervals")
        if self.w_min < 1:
            raise ValueError(f"w_min must be >= 1, got {self.w_min!r}")
        for a, b in zip(self.intervals, self.intervals[1:]):
            if not a.hi < b.lo:
                raise ValueError(
                    f"intervals must be strictly increasing and disjoint: "
                    f"[{a.lo:g}, {a.hi:g}] then [{b.lo:g}, {b.hi:g}]"
                )
        for pair in self.pairs:
            out = outage_pure(pair, self.tau, self.sigma_b2)
            if out > self.outage_target:
                raise ValueError(
                    f"pair (P_A={pair.p_a:g}, P_J={pair.p_j:g}) violates the outage "
                    f"target: {out:g} > {self.outage_target:g}"
                )

    @property
    def slack_factor(self) -> float:
        """sqrt(W_min * N * epsilon); interval half-widths are mu / this."""
        return math.sqrt(self.w_min * self.n_uses * self.epsilon)


def robust_interval(
    pair: PowerPair, w_min: int, n_uses: int, epsilon: float, sigma_w2: float
) -> RobustInterval:
    """[mu0 - mu0/s, mu1 + mu1/s] with s = sqrt(w_min * n_uses * epsilon),
    the lower edge clamped at zero."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie strictly in (0, 1), got {epsilon!r}")
    if w_min < 1 or n_uses < 1:
        raise ValueError("w_min and n_uses must be positive integers")
    means = HypothesisMeans.for_pair(pair, sigma_w2)
    s = math.sqrt(w_min * n_uses * epsilon)
    lo = max(0.0, means.mu0 - means.mu0 / s)
    hi = means.mu1 + means.mu1 / s
    return RobustInterval(lo, hi)


def minimum_separated_mu0(previous_hi: float, slack_factor: float) -> float:
    """Smallest H0 mean whose interval starts strictly above ``previous_hi``.

    Solves mu0 * (1 - 1/s) > previous_hi; requires s > 1, otherwise no larger
    mean can ever separate (the lower edge clamps to zero).
    """
    if slack_factor <= 1.0:
        return math.inf
    return previous_hi / (1.0 - 1.0 / slack_factor)


def _minimal_feasible_alice_power(
    p_j: float, tau: float, sigma_b2: float, target: float, cap: float
) -> float | None:
    """Smallest P_A (up to bisection tolerance) with outage <= target, or None."""

    def outage(p_a: float) -> float:
        return outage_pure(PowerPair(p_a, p_j), tau, sigma_b2)

    if outage(cap) > target:
        return None
    lo = 1e-12
    hi = cap
    if outage(lo) <= target:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if outage(mid) <= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return hi


def construct_disjoint_pairs(
    m: int,
    epsilon: float,
    w_min: int,
    n_uses: int,
    tau: float,
    sigma_b2: float,
    sigma_w2: float,
    outage_target: float,
    power_caps: tuple[float, float],
) -> RobustnessPlan:
    """Greedily build m outage-feasible pairs with disjoint robust intervals.

    Each step takes the smallest jamming power whose interval clears the
    previous one (with a 1% safety margin) and the smallest transmit power
    preserving outage feasibility, keeping the induced means as low as
    possible so as many intervals as possible fit under the power caps.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    if not 0.0 < outage_target < 1.0:
        raise ValueError(f"outage_target must lie strictly in (0, 1), got {outage_target!r}")
    alice_cap, jammer_cap = power_caps
    if alice_cap <= 0.0 or jammer_cap <= 0.0:
        raise ValueError("power caps must be positive")

    s = math.sqrt(w_min * n_uses * epsilon)
    if s <= 1.0 and m > 1:
        raise PlanInfeasibleError(
            f"slack factor sqrt(w_min*n_uses*epsilon)={s:g} <= 1: interval lower "
            f"edges clamp at zero and no two intervals can separate",
            achievable_m=1,
        )

    pairs: list[PowerPair] = []
    intervals: list[RobustInterval] = []
    p_j = 0.0
    for idx in range(m):
        if idx > 0:
            required_mu0 = 1.01 * minimum_separated_mu0(intervals[-1].hi, s)
            p_j = required_mu0 - sigma_w2
            if p_j > jammer_cap:
                raise PlanInfeasibleError(
                    f"jamming power {p_j:g} mW needed for pair {idx + 1} exceeds the "
                    f"cap {jammer_cap:g} mW; only {idx} separated pairs fit",
                    achievable_m=idx,
                )
        p_a = _minimal_feasible_alice_power(p_j, tau, sigma_b2, outage_target, alice_cap)
        if p_a is None:
            raise PlanInfeasibleError(
                f"no transmit power up to {alice_cap:g} mW meets the outage target "
                f"{outage_target:g} at jamming power {p_j:g} mW; only {idx} pairs fit",
                achievable_m=idx,
            )
        pair = PowerPair(p_a, p_j)
        pairs.append(pair)
        intervals.append(robust_interval(pair, w_min, n_uses, epsilon, sigma_w2))
    return RobustnessPlan(
        epsilon=epsilon,
        m=m,
        w_min=w_min,
        pairs=tuple(pairs),
        intervals=tuple(intervals),
        n_uses=n_uses,
        sigma_w2=sigma_w2,
        tau=tau,
        sigma_b2=sigma_b2,
        outage_target=outage_target,
    )


def _plan_params(plan: RobustnessPlan) -> SystemParams:
    # rate fields are irrelevant to the detection error; placeholders only
    return SystemParams(
        n_uses=plan.n_uses,
        sigma_b2=plan.sigma_b2,
        sigma_w2=plan.sigma_w2,
        rate_target=1.0,
        upsilon=0.5,
    )


def verify_interval_exclusion(
    plan: RobustnessPlan, fc_actions: list[FcAction]
) -> np.ndarray:
    """Exact error sums for every (pair, action) cell, shape (m, n_actions).

    Certifies the concentration bound: whenever an action's threshold falls
    outside a pair's interval, the exact Gamma-based error sum must be at
    least 1 - epsilon. A violation means a broken invariant and raises.
    """
    params = _plan_params(plan)
    table = np.empty((plan.m, len(fc_actions)))
    for i, pair in enumerate(plan.pairs):
        for k, action in enumerate(fc_actions):
            if action.w < plan.w_min:
                raise ValueError(
                    f"action sensor count {action.w} is below the plan's w_min={plan.w_min}"
                )
            table[i, k] = error_sum_pure(pair, action, params)
            if not plan.intervals[i].contains(action.t) and table[i, k] < 1.0 - plan.epsilon:
                raise RuntimeError(
                    f"exclusion bound violated: pair {i} at action (W={action.w}, "
                    f"t={action.t:g}) has error sum {table[i, k]:.6f} < {1.0 - plan.epsilon:.6f}"
                )
    return table


def covertness_probability(plan: RobustnessPlan, fc_strategy) -> float:
    """Exact probability that the error sum reaches 1 - epsilon under the joint
    randomness of the detector strategy and a uniform choice over plan pairs.

    Guaranteed >= 1 - 1/m by interval disjointness.
    """
    space = fc_strategy.space
    probs = np.asarray(fc_strategy.probs, dtype=float)
    params = _plan_params(plan)
    total = 0.0
    for wi, w in enumerate(space.w_set):
        for ti, t in enumerate(space.thresholds):
            weight = probs[wi, ti]
            if weight == 0.0:
                continue
            action = FcAction(int(w), float(t))
            covered = sum(
                1
                for pair in plan.pairs
                if error_sum_pure(pair, action, params) >= 1.0 - plan.epsilon
            )
            total += weight * covered / plan.m
    return total
