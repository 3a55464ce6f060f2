"""Zero-sum matrix-game solvers with explicit best-response certificates.

The row player maximizes, the column player minimizes. Two paths:

* a dense LP path (scipy HiGHS) solving the column player's program and
  reading the row strategy from the constraint duals, with an explicit
  re-solve fallback whenever the independent certificate misses tolerance;
* an iterative multiplicative-weights path over implicit payoff operators,
  using optimistic updates, fictitious-play style averaged iterates, and a
  best-response gap evaluation each epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _opt

__all__ = [
    "MatrixGame",
    "ZeroSumSolution",
    "SolverConvergenceError",
    "best_response_values",
    "duality_gap",
    "solve_zero_sum",
]


class SolverConvergenceError(RuntimeError):
    """Raised when no equilibrium within tolerance was certified.

    Carries the best duality gap achieved (``best_gap``) and, when available,
    the corresponding strategies (``best_solution``).
    """

    def __init__(self, message: str, best_gap: float = math.inf, best_solution=None):
        super().__init__(message)
        self.best_gap = best_gap
        self.best_solution = best_solution


class MatrixGame:
    """Dense zero-sum game; rows maximize, columns minimize."""

    def __init__(self, payoff) -> None:
        payoff = np.asarray(payoff, dtype=float)
        if payoff.ndim != 2 or payoff.size == 0:
            raise ValueError(f"payoff must be a nonempty 2-D array, got shape {payoff.shape}")
        if not np.all(np.isfinite(payoff)):
            raise ValueError("payoff entries must be finite")
        self._payoff = payoff

    @property
    def rows(self) -> int:
        return self._payoff.shape[0]

    @property
    def cols(self) -> int:
        return self._payoff.shape[1]

    def entry(self, row: int, col: int) -> float:
        return float(self._payoff[row, col])

    def matvec(self, col_strategy: np.ndarray) -> np.ndarray:
        return self._payoff @ col_strategy

    def rmatvec(self, row_strategy: np.ndarray) -> np.ndarray:
        return row_strategy @ self._payoff

    def value_bounds(self) -> tuple[float, float]:
        return float(self._payoff.min()), float(self._payoff.max())

    def matrix(self) -> np.ndarray:
        return self._payoff


@dataclass(frozen=True)
class ZeroSumSolution:
    """Equilibrium value, strategies, and best-response certificate."""

    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    gap: float
    method: str
    tol: float
    iterations: int = 0


def _clean_simplex(vec: np.ndarray) -> np.ndarray:
    vec = np.where(vec > 0.0, vec, 0.0)
    total = vec.sum()
    if total <= 0.0:
        raise ValueError("degenerate strategy vector (all mass clipped away)")
    return vec / total


def best_response_values(game, row_strategy: np.ndarray, col_strategy: np.ndarray):
    """(row best response value, column best response value, mixed value)."""
    against_cols = game.matvec(np.asarray(col_strategy, dtype=float))
    against_rows = game.rmatvec(np.asarray(row_strategy, dtype=float))
    row_best = float(np.max(against_cols))
    col_best = float(np.min(against_rows))
    value = float(np.dot(row_strategy, against_cols))
    return row_best, col_best, value


def duality_gap(game, row_strategy: np.ndarray, col_strategy: np.ndarray) -> float:
    row_best, col_best, _ = best_response_values(game, row_strategy, col_strategy)
    return max(row_best - col_best, 0.0)


def _linprog_column(payoff: np.ndarray):
    """min u s.t. A y <= u, sum(y) = 1, y >= 0; duals give the row strategy."""
    rows, cols = payoff.shape
    c = np.zeros(cols + 1)
    c[-1] = 1.0
    a_ub = np.hstack([payoff, -np.ones((rows, 1))])
    a_eq = np.zeros((1, cols + 1))
    a_eq[0, :cols] = 1.0
    bounds = [(0.0, None)] * cols + [(None, None)]
    res = _opt.linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(rows),
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        raise SolverConvergenceError(f"column LP failed: {res.message}")
    col = _clean_simplex(res.x[:cols])
    row = None
    marginals = getattr(getattr(res, "ineqlin", None), "marginals", None)
    if marginals is not None:
        dual = np.asarray(-np.asarray(marginals), dtype=float)
        if dual.sum() > 1e-12:
            row = _clean_simplex(dual)
    return row, col


def _linprog_row(payoff: np.ndarray) -> np.ndarray:
    """max v s.t. x^T A >= v, sum(x) = 1, x >= 0."""
    rows, cols = payoff.shape
    c = np.zeros(rows + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-payoff.T, np.ones((cols, 1))])
    a_eq = np.zeros((1, rows + 1))
    a_eq[0, :rows] = 1.0
    bounds = [(0.0, None)] * rows + [(None, None)]
    res = _opt.linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(cols),
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        raise SolverConvergenceError(f"row LP failed: {res.message}")
    return _clean_simplex(res.x[:rows])


def _solve_lp(game, tol: float) -> ZeroSumSolution:
    payoff = game.matrix()
    row, col = _linprog_column(payoff)
    if row is None:
        row = _linprog_row(payoff)
    row_best, col_best, value = best_response_values(game, row, col)
    gap = max(row_best - col_best, 0.0)
    if gap > tol:
        # duals can be degenerate; re-solve the row program explicitly
        row = _linprog_row(payoff)
        row_best, col_best, value = best_response_values(game, row, col)
        gap = max(row_best - col_best, 0.0)
    if gap > tol:
        raise SolverConvergenceError(
            f"LP solution certificate missed tolerance: gap={gap:.3e} > tol={tol:.3e}",
            best_gap=gap,
            best_solution=(value, row, col),
        )
    return ZeroSumSolution(value, row, col, gap, "lp", tol)


def _solve_mwu(
    game,
    tol: float,
    max_iterations: int,
    check_every: int = 250,
    eta: float = 0.25,
) -> ZeroSumSolution:
    rows, cols = game.rows, game.cols
    lo, hi = game.value_bounds()
    scale = hi - lo
    if scale <= 0.0:
        # constant game: everything is an equilibrium
        x = np.full(rows, 1.0 / rows)
        y = np.full(cols, 1.0 / cols)
        return ZeroSumSolution(lo, x, y, 0.0, "mwu", tol, iterations=0)

    def norm_matvec(y: np.ndarray) -> np.ndarray:
        return (game.matvec(y) - lo * y.sum()) / scale

    def norm_rmatvec(x: np.ndarray) -> np.ndarray:
        return (game.rmatvec(x) - lo * x.sum()) / scale

    log_x = np.zeros(rows)
    log_y = np.zeros(cols)
    x = np.full(rows, 1.0 / rows)
    y = np.full(cols, 1.0 / cols)
    x_sum = x.copy()
    y_sum = y.copy()
    gx_prev = norm_matvec(y)
    gy_prev = norm_rmatvec(x)
    best_gap = math.inf
    best = None
    for it in range(1, max_iterations + 1):
        gx = norm_matvec(y)
        gy = norm_rmatvec(x)
        log_x += eta * (2.0 * gx - gx_prev)
        log_y -= eta * (2.0 * gy - gy_prev)
        log_x -= log_x.max()
        log_y -= log_y.max()
        x = np.exp(log_x)
        x /= x.sum()
        y = np.exp(log_y)
        y /= y.sum()
        gx_prev, gy_prev = gx, gy
        x_sum += x
        y_sum += y
        if it % check_every == 0 or it == max_iterations:
            # certify both the fictitious-play averages and the current
            # iterates; optimistic updates often converge last-iterate first
            x_avg = x_sum / (it + 1)
            y_avg = y_sum / (it + 1)
            for cand_x, cand_y in ((x_avg, y_avg), (x, y)):
                row_best, col_best, value = best_response_values(game, cand_x, cand_y)
                gap = max(row_best - col_best, 0.0)
                if gap < best_gap:
                    best_gap = gap
                    best = (value, cand_x.copy(), cand_y.copy(), it)
                if gap <= tol:
                    return ZeroSumSolution(
                        value, cand_x, cand_y, gap, "mwu", tol, iterations=it
                    )
    value, x_avg, y_avg, it = best
    raise SolverConvergenceError(
        f"multiplicative-weights budget of {max_iterations} iterations exhausted: "
        f"best gap={best_gap:.3e} > tol={tol:.3e}",
        best_gap=best_gap,
        best_solution=ZeroSumSolution(value, x_avg, y_avg, best_gap, "mwu", tol, iterations=it),
    )


def solve_zero_sum(
    game,
    tol: float | None = None,
    method: str = "auto",
    max_iterations: int = 200_000,
) -> ZeroSumSolution:
    """Solve a zero-sum game to a certified duality gap <= tol.

    ``game`` is a MatrixGame, a 2-D array, or any object exposing rows, cols,
    matvec, rmatvec, and value_bounds (plus matrix() for the LP path).
    """
    if isinstance(game, np.ndarray) or (
        not hasattr(game, "matvec") and hasattr(game, "__len__")
    ):
        game = MatrixGame(game)
    if method == "auto":
        method = "lp" if hasattr(game, "matrix") else "mwu"
    if method == "lp":
        return _solve_lp(game, 1e-6 if tol is None else tol)
    if method == "mwu":
        return _solve_mwu(game, 1e-3 if tol is None else tol, max_iterations)
    raise ValueError(f"unknown method {method!r}")
