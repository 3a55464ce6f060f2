"""Soft-fusion covert-detection error probabilities, the zero-sum
power-randomization vs detection game, and high-probability covertness
verification, with Monte Carlo oracles and an experiment CLI."""

from .detection import (
    FcAction,
    FcActionSpace,
    HypothesisMeans,
    argmin_threshold,
    error_derivative,
    error_sum_curve,
    error_sum_pure,
    log_error_sum_curve,
    optimal_threshold,
    pfa_avg,
    pfa_pure,
    pmd_avg,
    pmd_pure,
)
from .game import (
    AliceJammerStrategy,
    FcStrategy,
    GameSolution,
    PayoffCapacityError,
    PayoffDecomposition,
    best_response_value,
    build_payoff,
    expected_wardens,
    marginals,
    solve_equilibrium,
)
from .geometric import GeometricDeployment, geometric_weights, solve_restricted_equilibrium
from .lpsolve import MatrixGame, SolverConvergenceError, ZeroSumSolution, solve_zero_sum
from .montecarlo import SimConfig, simulate_detection, simulate_outage
from .robustness import (
    PlanInfeasibleError,
    RobustInterval,
    RobustnessPlan,
    construct_disjoint_pairs,
    covertness_probability,
    robust_interval,
    verify_interval_exclusion,
)
from .specfun import inv_qfunc, ln_gamma, reg_lower_gamma, reg_upper_gamma
from .system import (
    InfeasibleRateError,
    PowerGrid,
    PowerPair,
    SystemParams,
    grid_levels,
    outage_feasible_set,
    outage_mixed,
    outage_pure,
    sinr_threshold,
)

__version__ = "0.1.0"
