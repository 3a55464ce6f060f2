"""Seeded Monte Carlo oracles validating the analytical probabilities.

Trials are partitioned into fixed-size streams of a counter-based (Philox)
generator, so results are bit-identical for a given (config, seed) regardless
of how streams would be scheduled. Exponential draws use the inverse CDF of
uniform variates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detection import FcAction, HypothesisMeans
from .system import PowerPair, SystemParams

__all__ = [
    "SimConfig",
    "DetectionEstimate",
    "OutageEstimate",
    "simulate_detection",
    "simulate_outage",
]

_TARGET_DRAWS_PER_CHUNK = 2_000_000
_OUTAGE_CHUNK = 262_144


@dataclass(frozen=True)
class SimConfig:
    """Trial count and 64-bit seed for a simulation run."""

    trials: int
    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.trials, int) or isinstance(self.trials, bool) or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not (
            0 <= self.seed < 2**64
        ):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class DetectionEstimate:
    pfa: float
    pmd: float
    se_pfa: float
    se_pmd: float
    trials: int


@dataclass(frozen=True)
class OutageEstimate:
    p_out: float
    se: float
    trials: int


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def _exponential(rng: np.random.Generator, mean: float, size) -> np.ndarray:
    # inverse CDF of uniform draws; u in [0, 1) keeps log1p(-u) finite
    return -mean * np.log1p(-rng.random(size))


def _binomial_se(p_hat: float, n: int) -> float:
    return math.sqrt(p_hat * (1.0 - p_hat) / n)


def simulate_detection(
    pair: PowerPair, action: FcAction, params: SystemParams, cfg: SimConfig
) -> DetectionEstimate:
    """Empirical false-alarm and missed-detection rates of the fused test.

    Each trial draws W*N exponential energies under each hypothesis, averages
    them, and compares the mean against the threshold.
    """
    means = HypothesisMeans.for_pair(pair, params.sigma_w2)
    draws_per_trial = action.w * params.n_uses
    chunk = max(1, _TARGET_DRAWS_PER_CHUNK // draws_per_trial)
    false_alarms = 0
    missed = 0
    done = 0
    stream_index = 0
    while done < cfg.trials:
        n = min(chunk, cfg.trials - done)
        rng = _stream(cfg.seed, stream_index)
        quiet = _exponential(rng, means.mu0, (n, draws_per_trial)).mean(axis=1)
        false_alarms += int(np.count_nonzero(quiet > action.t))
        active = _exponential(rng, means.mu1, (n, draws_per_trial)).mean(axis=1)
        missed += int(np.count_nonzero(active <= action.t))
        done += n
        stream_index += 1
    pfa_hat = false_alarms / cfg.trials
    pmd_hat = missed / cfg.trials
    return DetectionEstimate(
        pfa=pfa_hat,
        pmd=pmd_hat,
        se_pfa=_binomial_se(pfa_hat, cfg.trials),
        se_pmd=_binomial_se(pmd_hat, cfg.trials),
        trials=cfg.trials,
    )


def simulate_outage(
    pair: PowerPair, tau: float, sigma_b2: float, cfg: SimConfig
) -> OutageEstimate:
    """Empirical probability that the instantaneous SINR falls below tau under
    unit-mean Rayleigh fading on both links."""
    if tau <= 0.0 or sigma_b2 <= 0.0:
        raise ValueError("tau and sigma_b2 must be positive")
    outages = 0
    done = 0
    stream_index = 0
    while done < cfg.trials:
        n = min(_OUTAGE_CHUNK, cfg.trials - done)
        rng = _stream(cfg.seed, stream_index)
        gain_a = _exponential(rng, 1.0, n)
        gain_j = _exponential(rng, 1.0, n)
        sinr = gain_a * pair.p_a / (sigma_b2 + gain_j * pair.p_j)
        outages += int(np.count_nonzero(sinr < tau))
        done += n
        stream_index += 1
    p_hat = outages / cfg.trials
    return OutageEstimate(p_out=p_hat, se=_binomial_se(p_hat, cfg.trials), trials=cfg.trials)
