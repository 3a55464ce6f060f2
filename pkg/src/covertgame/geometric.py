"""Semi-strategic detector baseline: the sensor-count marginal is pinned to a
finite-support geometric-shaped distribution and only the threshold
distribution is optimized against the power randomizers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lpsolve
from .detection import FcActionSpace, detection_tables_compact
from .game import (
    AliceJammerStrategy,
    FcStrategy,
    GameSolution,
    _solution_with_metrics,
    build_payoff,
)
from .system import PowerGrid, SystemParams, outage_table

__all__ = [
    "GeometricDeployment",
    "geometric_weights",
    "solve_restricted_equilibrium",
]


@dataclass(frozen=True)
class GeometricDeployment:
    """Fixed sensor-count distribution with weights (1-p)^(w-1) * p, normalized
    over a finite support."""

    p: float
    support: tuple[int, ...] = (1, 4, 16, 64)

    def __post_init__(self) -> None:
        if not math.isfinite(self.p) or not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie strictly in (0, 1), got {self.p!r}")
        object.__setattr__(self, "support", tuple(int(w) for w in self.support))
        if not self.support:
            raise ValueError("support must be nonempty")
        prev = 0
        for w in self.support:
            if w < 1 or w <= prev:
                raise ValueError("support must be strictly increasing positive integers")
            prev = w


def geometric_weights(dep: GeometricDeployment) -> np.ndarray:
    """Normalized weights (1-p)^(w-1) * p over the deployment support."""
    w = np.asarray(dep.support, dtype=float)
    raw = (1.0 - dep.p) ** (w - 1.0) * dep.p
    return raw / raw.sum()


def solve_restricted_equilibrium(
    dep: GeometricDeployment,
    grid: PowerGrid,
    space: FcActionSpace,
    params: SystemParams,
    tau: float,
    tol: float | None = None,
) -> GameSolution:
    """Equilibrium with the detector restricted to product strategies
    g(W) * pi(t), where g is the fixed geometric deployment weighting.

    The detector optimizes only pi(t); the power players optimize their joint
    distribution against the induced joint law of (W, t). Thresholds come from
    ``space``; the sensor counts are the deployment support.
    """
    restricted_space = FcActionSpace(dep.support, space.thresholds)
    weights = geometric_weights(dep)
    m = len(restricted_space.thresholds)

    pfa, pmd_unique, row_map = detection_tables_compact(
        grid, restricted_space, params.n_uses, params.sigma_w2
    )
    # collapse the W axis under the fixed weights: (rows, m) effective tables
    def collapse(table: np.ndarray) -> np.ndarray:
        return (table.reshape(table.shape[0], len(dep.support), m) * weights[None, :, None]).sum(
            axis=1
        )

    pfa_eff = collapse(pfa)  # (J, m)
    pmd_eff = collapse(pmd_unique)  # (U, m)
    n_rows = grid.shape[0] * grid.shape[1]
    j_index = np.arange(n_rows) % len(grid.jammer_levels)
    det_eff = pfa_eff[j_index] + pmd_eff[row_map]  # (R, m)

    reliability = 1.0 - outage_table(grid, tau, params.sigma_b2).ravel()
    expected_w = float(np.asarray(dep.support, dtype=float) @ weights)
    matrix = reliability[:, None] + params.beta * det_eff + params.alpha * expected_w

    sol = lpsolve.solve_zero_sum(lpsolve.MatrixGame(matrix), tol=tol, method="lp")
    aj = AliceJammerStrategy(sol.row_strategy.reshape(grid.shape))
    fc = FcStrategy(restricted_space, np.outer(weights, sol.col_strategy))
    payoff = build_payoff(grid, restricted_space, params, tau, materialize=False)
    return _solution_with_metrics(payoff, sol, aj, fc)
