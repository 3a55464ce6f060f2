"""Zero-sum game between the power randomizers (maximizers) and the detector
(minimizer) over joint (sensor-count, threshold) actions.

Per-entry utility for power pair (i, j) against action (W, t):

    U = 1 - P_out(i, j) + beta * (P_FA + P_MD)(i, j, W, t) + alpha * W
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import lpsolve
from .detection import FcActionSpace, detection_tables_compact, pfa_avg, pmd_avg
from .system import PowerGrid, SystemParams, outage_mixed, outage_table

__all__ = [
    "AliceJammerStrategy",
    "FcStrategy",
    "PayoffDecomposition",
    "PayoffCapacityError",
    "GameSolution",
    "build_payoff",
    "solve_equilibrium",
    "expected_wardens",
    "best_response_value",
    "marginals",
]

DEFAULT_MAX_ENTRIES = 50_000_000
DEFAULT_DENSE_LIMIT = 2_000_000

_SUM_TOL = 1e-9


class PayoffCapacityError(RuntimeError):
    """Requested payoff tensor exceeds the configured memory budget."""


def _check_distribution(probs: np.ndarray, name: str) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if not np.all(np.isfinite(probs)) or np.any(probs < 0.0):
        raise ValueError(f"{name} probabilities must be finite and non-negative")
    total = float(probs.sum())
    if abs(total - 1.0) > _SUM_TOL:
        raise ValueError(f"{name} probabilities must sum to 1 within {_SUM_TOL}, got {total!r}")
    probs = probs.copy()
    probs.flags.writeable = False
    return probs


@dataclass(frozen=True, eq=False)
class AliceJammerStrategy:
    """Joint distribution over (alice level, jammer level) grid indices, shape (I, J)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _check_distribution(self.probs, "alice-jammer strategy")
        if probs.ndim != 2:
            raise ValueError(f"alice-jammer strategy must be 2-D, got shape {probs.shape}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, shape: tuple[int, int], i: int, j: int) -> "AliceJammerStrategy":
        probs = np.zeros(shape)
        probs[i, j] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, shape: tuple[int, int]) -> "AliceJammerStrategy":
        return cls(np.full(shape, 1.0 / (shape[0] * shape[1])))


@dataclass(frozen=True, eq=False)
class FcStrategy:
    """Distribution over detector actions, shape (len(w_set), len(thresholds))."""

    space: FcActionSpace
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _check_distribution(self.probs, "detector strategy")
        expected = (len(self.space.w_set), len(self.space.thresholds))
        if probs.shape != expected:
            raise ValueError(f"detector strategy shape {probs.shape} != {expected}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, space: FcActionSpace, w_index: int, t_index: int) -> "FcStrategy":
        probs = np.zeros((len(space.w_set), len(space.thresholds)))
        probs[w_index, t_index] = 1.0
        return cls(space, probs)

    @classmethod
    def uniform(cls, space: FcActionSpace) -> "FcStrategy":
        size = len(space.w_set) * len(space.thresholds)
        return cls(space, np.full((len(space.w_set), len(space.thresholds)), 1.0 / size))

    @property
    def flat(self) -> np.ndarray:
        return self.probs.ravel()


@dataclass(frozen=True, eq=False)
class PayoffDecomposition:
    """Utility tensor split into reliability, detection, and cost components.

    reliability[r]   = 1 - P_out for flattened pair r = i*J + j
    detection[r, k]  = P_FA + P_MD for action k; dense when materialized,
                       otherwise recoverable from the compact tables
    cost[k]          = sensor count W of action k
    entry(r, k)      = reliability[r] + beta*detection[r, k] + alpha*cost[k]

    The recombination expression is identical in every access path, so dense
    and on-demand entries agree bit for bit.
    """

    reliability: np.ndarray
    detection: np.ndarray | None
    cost: np.ndarray
    alpha: float
    beta: float
    grid: PowerGrid
    space: FcActionSpace
    params: SystemParams
    tau: float
    pfa_by_jammer: np.ndarray  # (J, K)
    pmd_unique: np.ndarray  # (U, K)
    pmd_row_map: np.ndarray  # (R,) row -> unique-H1-mean index

    @property
    def n_rows(self) -> int:
        return self.reliability.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cost.shape[0]

    def detection_row(self, r: int) -> np.ndarray:
        if self.detection is not None:
            return self.detection[r]
        j = r % len(self.grid.jammer_levels)
        return self.pfa_by_jammer[j] + self.pmd_unique[self.pmd_row_map[r]]

    def entry(self, r: int, k: int) -> float:
        return float(
            self.reliability[r] + self.beta * self.detection_row(r)[k] + self.alpha * self.cost[k]
        )

    def detection_dense(self) -> np.ndarray:
        if self.detection is not None:
            return self.detection
        n_j = len(self.grid.jammer_levels)
        j_index = np.arange(self.n_rows) % n_j
        return self.pfa_by_jammer[j_index] + self.pmd_unique[self.pmd_row_map]

    def matrix(self) -> np.ndarray:
        """Dense utility matrix (rows: power pairs, cols: detector actions)."""
        return (
            self.reliability[:, None]
            + self.beta * self.detection_dense()
            + self.alpha * self.cost[None, :]
        )

    def with_weights(self, alpha: float, beta: float) -> "PayoffDecomposition":
        """Same tensors under different utility weights (tensors are shared)."""
        if alpha < 0.0 or beta < 0.0:
            raise ValueError("alpha and beta must be non-negative")
        return replace(
            self,
            alpha=float(alpha),
            beta=float(beta),
            params=replace(self.params, alpha=float(alpha), beta=float(beta)),
        )


class _DecompositionGame:
    """Implicit zero-sum game over a payoff decomposition (no dense tensor)."""

    def __init__(self, payoff: PayoffDecomposition) -> None:
        self._p = payoff
        self._j_index = np.arange(payoff.n_rows) % len(payoff.grid.jammer_levels)

    @property
    def rows(self) -> int:
        return self._p.n_rows

    @property
    def cols(self) -> int:
        return self._p.n_cols

    def entry(self, r: int, c: int) -> float:
        return self._p.entry(r, c)

    def matvec(self, y: np.ndarray) -> np.ndarray:
        p = self._p
        pfa_dot = p.pfa_by_jammer @ y  # (J,)
        pmd_dot = p.pmd_unique @ y  # (U,)
        det = pfa_dot[self._j_index] + pmd_dot[p.pmd_row_map]
        return p.reliability * float(y.sum()) + p.beta * det + p.alpha * float(p.cost @ y)

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        p = self._p
        j_weights = np.bincount(self._j_index, weights=x, minlength=p.pfa_by_jammer.shape[0])
        u_weights = np.bincount(p.pmd_row_map, weights=x, minlength=p.pmd_unique.shape[0])
        det = j_weights @ p.pfa_by_jammer + u_weights @ p.pmd_unique
        return (
            float(x @ p.reliability)
            + p.beta * det
            + (p.alpha * float(x.sum())) * p.cost
        )

    def value_bounds(self) -> tuple[float, float]:
        p = self._p
        lo = float(p.reliability.min()) + p.alpha * float(p.cost.min())
        hi = float(p.reliability.max()) + p.beta * 2.0 + p.alpha * float(p.cost.max())
        return lo, hi


@dataclass(frozen=True, eq=False)
class GameSolution:
    """Equilibrium value, strategies, certificate, and derived metrics."""

    value: float
    aj: AliceJammerStrategy
    fc: FcStrategy
    gap: float
    tol: float
    method: str
    expected_w: float
    pfa: float
    pmd: float
    pout: float
    iterations: int = 0

    @property
    def err_sum(self) -> float:
        return self.pfa + self.pmd


def build_payoff(
    grid: PowerGrid,
    space: FcActionSpace,
    params: SystemParams,
    tau: float,
    max_entries: int = DEFAULT_MAX_ENTRIES,
    materialize: bool = True,
) -> PayoffDecomposition:
    """Assemble the utility decomposition for a grid/action-space instance.

    With ``materialize=True`` the dense (I*J, K) detection tensor is built and
    a PayoffCapacityError is raised when it would exceed ``max_entries``;
    ``materialize=False`` keeps only the compact per-jammer / per-H1-mean
    tables used by the iterative solver path.
    """
    n_rows = grid.shape[0] * grid.shape[1]
    n_cols = space.size
    if materialize and n_rows * n_cols > max_entries:
        raise PayoffCapacityError(
            f"detection tensor would hold {n_rows * n_cols:,} entries "
            f"(> budget {max_entries:,}); use coarser grids, a smaller action "
            f"space, or materialize=False"
        )
    reliability = 1.0 - outage_table(grid, tau, params.sigma_b2).ravel()
    pfa, pmd_unique, row_map = detection_tables_compact(
        grid, space, params.n_uses, params.sigma_w2
    )
    detection = None
    if materialize:
        j_index = np.arange(n_rows) % len(grid.jammer_levels)
        detection = pfa[j_index] + pmd_unique[row_map]
    return PayoffDecomposition(
        reliability=reliability,
        detection=detection,
        cost=np.repeat(np.asarray(space.w_set, dtype=float), len(space.thresholds)),
        alpha=params.alpha,
        beta=params.beta,
        grid=grid,
        space=space,
        params=params,
        tau=tau,
        pfa_by_jammer=pfa,
        pmd_unique=pmd_unique,
        pmd_row_map=row_map,
    )


def solve_equilibrium(
    payoff: PayoffDecomposition,
    tol: float | None = None,
    dense_limit: int = DEFAULT_DENSE_LIMIT,
    max_iterations: int = 200_000,
) -> GameSolution:
    """Compute the equilibrium of the decomposed game with a certificate.

    The dense LP path runs when the materialized tensor is available and the
    action-count product stays within ``dense_limit``; otherwise the
    iterative multiplicative-weights path runs against the compact tables.
    Default tolerances: 1e-6 (dense), 1e-3 (iterative).
    """
    size = payoff.n_rows * payoff.n_cols
    use_dense = payoff.detection is not None and size <= dense_limit
    if use_dense:
        sol = lpsolve.solve_zero_sum(
            lpsolve.MatrixGame(payoff.matrix()), tol=tol, method="lp"
        )
    else:
        sol = lpsolve.solve_zero_sum(
            _DecompositionGame(payoff),
            tol=tol,
            method="mwu",
            max_iterations=max_iterations,
        )
    i, j = payoff.grid.shape
    aj = AliceJammerStrategy(sol.row_strategy.reshape(i, j))
    fc = FcStrategy(
        payoff.space,
        sol.col_strategy.reshape(len(payoff.space.w_set), len(payoff.space.thresholds)),
    )
    return _solution_with_metrics(payoff, sol, aj, fc)


def _solution_with_metrics(
    payoff: PayoffDecomposition,
    sol: lpsolve.ZeroSumSolution,
    aj: AliceJammerStrategy,
    fc: FcStrategy,
) -> GameSolution:
    return GameSolution(
        value=sol.value,
        aj=aj,
        fc=fc,
        gap=sol.gap,
        tol=sol.tol,
        method=sol.method,
        expected_w=expected_wardens(fc),
        pfa=pfa_avg(aj, fc, payoff.grid, payoff.space, payoff.params),
        pmd=pmd_avg(aj, fc, payoff.grid, payoff.space, payoff.params),
        pout=outage_mixed(aj, payoff.grid, payoff.tau, payoff.params.sigma_b2),
        iterations=sol.iterations,
    )


def expected_wardens(fc: FcStrategy) -> float:
    """Expected active sensor count under a detector strategy."""
    w = np.asarray(fc.space.w_set, dtype=float)
    return float(w @ fc.probs.sum(axis=1))


def best_response_value(payoff: PayoffDecomposition, opponent_strategy, side: str) -> float:
    """Best achievable expected utility by a pure deviation.

    side="aj": the power players' best pure pair against a detector strategy
    (maximum); side="fc": the detector's best pure action against a joint
    power strategy (minimum).
    """
    game = _DecompositionGame(payoff)
    if side == "aj":
        fc_flat = np.asarray(
            getattr(opponent_strategy, "flat", getattr(opponent_strategy, "probs", opponent_strategy)),
            dtype=float,
        ).ravel()
        if fc_flat.shape[0] != payoff.n_cols:
            raise ValueError("detector strategy does not match the action space")
        return float(np.max(game.matvec(fc_flat)))
    if side == "fc":
        aj_flat = np.asarray(
            getattr(opponent_strategy, "probs", opponent_strategy), dtype=float
        ).ravel()
        if aj_flat.shape[0] != payoff.n_rows:
            raise ValueError("power strategy does not match the grid")
        return float(np.min(game.rmatvec(aj_flat)))
    raise ValueError(f"side must be 'aj' or 'fc', got {side!r}")


def marginals(fc: FcStrategy) -> tuple[np.ndarray, np.ndarray]:
    """(distribution over sensor counts, distribution over thresholds)."""
    return fc.probs.sum(axis=1), fc.probs.sum(axis=0)
