"""Experiment runner: each subcommand reproduces one family of artifacts
(threshold sweeps, tradeoff curves, equilibrium summaries, deployment-cost
sweeps, the geometric baseline, the robustness construction, and Monte Carlo
validation) as a CSV plus a JSON run manifest."""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .detection import (
    FcAction,
    FcActionSpace,
    error_sum_curve,
    optimal_threshold,
    pfa_pure,
    pmd_pure,
)
from .game import (
    FcStrategy,
    GameSolution,
    PayoffCapacityError,
    build_payoff,
    marginals,
    solve_equilibrium,
)
from .geometric import GeometricDeployment, solve_restricted_equilibrium
from .lpsolve import SolverConvergenceError
from .montecarlo import SimConfig, simulate_detection, simulate_outage
from .robustness import (
    PlanInfeasibleError,
    construct_disjoint_pairs,
    covertness_probability,
    verify_interval_exclusion,
)
from .system import PowerGrid, PowerPair, SystemParams, grid_levels, outage_pure, sinr_threshold

OUTPUT_DIR_ENV = "COVERTGAME_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

DEFAULT_CONFIG: dict = {
    "params": {
        "n_uses": 200,
        "sigma_b2": 1.0,
        "sigma_w2": 1.0,
        "rate_target": 0.4,
        "upsilon": 0.1,
        "alpha": 0.1,
        "beta": 1.0,
    },
    "grids": {
        "alice": {"min": 0.01, "max": 3.0, "spacing": 0.05},
        "jammer": {"min": 0.01, "max": 3.0, "spacing": 0.05},
        "threshold": {"min": 0.01, "max": 6.0, "spacing": 0.05},
    },
    "full_grid_spacing": 0.01,
    "w_set": [1, 4, 16, 64],
    "beta_list": [0.1, 1.0, 4.0, 16.0, 64.0],
    "alpha_list": [1e-1, 1e-2, 1e-5, 1e-10],
    "sweep": {"p_a": 2.0, "p_j": 2.0, "w": 1},
    "geometric": {"p_list": [0.1, 0.3, 0.5, 0.7, 0.9], "support": [1, 4, 16, 64]},
    "robustness": {
        "epsilon": 0.02,
        "m": 10,
        "w_min": 1,
        "outage_target": 0.5,
        "alice_cap": 1.0e7,
        "jammer_cap": 1.0e7,
    },
    "mc": {
        "detection_trials": 100000,
        "outage_trials": 1000000,
        "seed": 20240601,
        "cases": 8,
    },
    "solver": {
        "tol_dense": 1.0e-6,
        "tol_iterative": 1.0e-3,
        "dense_limit": 2000000,
        "max_entries": 50000000,
        "iteration_budget": 200000,
    },
    "output_dir": "runs",
}


class ConfigError(ValueError):
    """Invalid configuration; the message is anchored to the offending path."""


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _deep_merge(base: dict, extra: dict, path: str = "") -> dict:
    merged = copy.deepcopy(base)
    for key, value in extra.items():
        here = f"{path}.{key}" if path else key
        if key not in merged:
            raise ConfigError(f"{here}: unknown configuration key")
        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{here}: expected a table, got {value!r}")
            merged[key] = _deep_merge(merged[key], value, here)
        else:
            merged[key] = value
    return merged


def _apply_override(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set {assignment!r}: expected dotted.path=value")
    path, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    keys = path.split(".")
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"{path}: unknown configuration key")
        node = node[key]
    leaf = keys[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"{path}: unknown configuration key")
    if isinstance(node[leaf], dict):
        raise ConfigError(f"{path}: cannot assign a scalar to a table")
    node[leaf] = value


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _validate(cfg: dict) -> None:
    p = cfg["params"]
    _require(isinstance(p["n_uses"], int) and p["n_uses"] >= 1, "params.n_uses", "positive integer required")
    for key in ("sigma_b2", "sigma_w2", "rate_target"):
        _require(isinstance(p[key], (int, float)) and p[key] > 0, f"params.{key}", "positive number required")
    _require(0 < p["upsilon"] < 1, "params.upsilon", "must lie strictly in (0, 1)")
    for key in ("alpha", "beta"):
        _require(isinstance(p[key], (int, float)) and p[key] >= 0, f"params.{key}", "non-negative number required")
    for grid in ("alice", "jammer", "threshold"):
        g = cfg["grids"][grid]
        for key in ("min", "max", "spacing"):
            _require(isinstance(g[key], (int, float)), f"grids.{grid}.{key}", "number required")
        _require(g["spacing"] > 0, f"grids.{grid}.spacing", "must be positive")
        _require(g["min"] > 0, f"grids.{grid}.min", "must be positive")
        _require(g["max"] >= g["min"], f"grids.{grid}.max", "must be >= min")
    _require(bool(cfg["w_set"]), "w_set", "must be nonempty")
    _require(
        all(isinstance(w, int) and w >= 1 for w in cfg["w_set"])
        and list(cfg["w_set"]) == sorted(set(cfg["w_set"])),
        "w_set",
        "strictly increasing positive integers required",
    )
    for name in ("beta_list", "alpha_list"):
        _require(bool(cfg[name]), name, "must be nonempty")
        _require(all(isinstance(v, (int, float)) and v >= 0 for v in cfg[name]), name, "non-negative numbers required")
    _require(cfg["sweep"]["p_a"] > 0, "sweep.p_a", "must be positive")
    _require(cfg["sweep"]["p_j"] >= 0, "sweep.p_j", "must be non-negative")
    _require(isinstance(cfg["sweep"]["w"], int) and cfg["sweep"]["w"] >= 1, "sweep.w", "positive integer required")
    geo = cfg["geometric"]
    _require(bool(geo["p_list"]), "geometric.p_list", "must be nonempty")
    _require(all(0 < v < 1 for v in geo["p_list"]), "geometric.p_list", "values must lie strictly in (0, 1)")
    rob = cfg["robustness"]
    _require(0 < rob["epsilon"] < 1, "robustness.epsilon", "must lie strictly in (0, 1)")
    _require(isinstance(rob["m"], int) and rob["m"] >= 1, "robustness.m", "positive integer required")
    _require(isinstance(rob["w_min"], int) and rob["w_min"] >= 1, "robustness.w_min", "positive integer required")
    _require(0 < rob["outage_target"] < 1, "robustness.outage_target", "must lie strictly in (0, 1)")
    _require(rob["alice_cap"] > 0 and rob["jammer_cap"] > 0, "robustness.alice_cap", "caps must be positive")
    mc = cfg["mc"]
    for key in ("detection_trials", "outage_trials", "cases"):
        _require(isinstance(mc[key], int) and mc[key] >= 1, f"mc.{key}", "positive integer required")
    _require(isinstance(mc["seed"], int) and 0 <= mc["seed"] < 2**64, "mc.seed", "unsigned 64-bit integer required")
    sv = cfg["solver"]
    _require(sv["tol_dense"] > 0 and sv["tol_iterative"] > 0, "solver.tol_dense", "tolerances must be positive")
    _require(isinstance(cfg["output_dir"], str) and cfg["output_dir"], "output_dir", "nonempty path required")


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top-level value must be an object")
        cfg = _deep_merge(cfg, user)
    for assignment in overrides:
        _apply_override(cfg, assignment)
    _validate(cfg)
    return cfg


def _system_objects(cfg: dict, full_grids: bool):
    p = cfg["params"]
    params = SystemParams(
        n_uses=p["n_uses"],
        sigma_b2=float(p["sigma_b2"]),
        sigma_w2=float(p["sigma_w2"]),
        rate_target=float(p["rate_target"]),
        upsilon=float(p["upsilon"]),
        alpha=float(p["alpha"]),
        beta=float(p["beta"]),
    )
    tau = sinr_threshold(params)
    g = cfg["grids"]
    spacing = {
        name: (cfg["full_grid_spacing"] if full_grids else g[name]["spacing"])
        for name in ("alice", "jammer", "threshold")
    }
    grid = PowerGrid.from_ranges(
        (g["alice"]["min"], g["alice"]["max"], spacing["alice"]),
        (g["jammer"]["min"], g["jammer"]["max"], spacing["jammer"]),
    )
    space = FcActionSpace.from_ranges(
        tuple(cfg["w_set"]),
        (g["threshold"]["min"], g["threshold"]["max"], spacing["threshold"]),
    )
    return params, tau, grid, space


def _solve(payoff, cfg: dict, full_grids: bool) -> GameSolution:
    sv = cfg["solver"]
    tol = sv["tol_iterative"] if full_grids else sv["tol_dense"]
    return solve_equilibrium(
        payoff,
        tol=tol,
        dense_limit=sv["dense_limit"],
        max_iterations=sv["iteration_budget"],
    )


def _certificate(label: str, sol: GameSolution) -> dict:
    return {
        "label": label,
        "value": sol.value,
        "gap": sol.gap,
        "tol": sol.tol,
        "method": sol.method,
        "iterations": sol.iterations,
    }


def cmd_threshold_sweep(cfg, full_grids):
    """Conditional error sum versus threshold for one fixed power pair."""
    params, tau, _, _ = _system_objects(cfg, full_grids)
    sweep = cfg["sweep"]
    pair = PowerPair(float(sweep["p_a"]), float(sweep["p_j"]))
    w = int(sweep["w"])
    g = cfg["grids"]["threshold"]
    spacing = cfg["full_grid_spacing"] if full_grids else g["spacing"]
    thresholds = np.array(grid_levels(g["min"], g["max"], spacing))
    curve = error_sum_curve(pair, w, params.n_uses, params.sigma_w2, thresholds)
    rows = []
    for t, err in zip(thresholds, curve):
        fa = pfa_pure(pair.p_j, w, float(t), params.n_uses, params.sigma_w2)
        rows.append([float(t), fa, float(err) - fa, float(err)])
    argmin = int(np.argmin(curve))
    extras = {
        "tau": tau,
        "optimal_threshold": optimal_threshold(pair, params.sigma_w2),
        "argmin_threshold": float(thresholds[argmin]),
        "argmin_error_sum": float(curve[argmin]),
    }
    return "threshold_sweep", ["t", "pfa", "pmd", "err_sum"], rows, [], extras


def cmd_tradeoff(cfg, full_grids):
    """Detection error versus reliability across beta, for fixed and geometric
    sensor-count policies."""
    params, tau, grid, space = _system_objects(cfg, full_grids)
    rows = []
    certificates = []
    for w in cfg["w_set"]:
        sub_space = FcActionSpace((int(w),), space.thresholds)
        payoff = build_payoff(
            grid, sub_space, params, tau,
            max_entries=cfg["solver"]["max_entries"],
            materialize=not full_grids,
        )
        for beta in cfg["beta_list"]:
            sol = _solve(payoff.with_weights(params.alpha, float(beta)), cfg, full_grids)
            certificates.append(_certificate(f"tradeoff W={w} beta={beta}", sol))
            rows.append(
                [beta, f"W={w}", "", sol.pfa, sol.pmd, sol.err_sum, 1.0 - sol.pout, sol.gap]
            )
    for p in cfg["geometric"]["p_list"]:
        dep = GeometricDeployment(float(p), tuple(cfg["geometric"]["support"]))
        for beta in cfg["beta_list"]:
            sol = solve_restricted_equilibrium(
                dep, grid, space, replace(params, beta=float(beta)), tau,
                tol=cfg["solver"]["tol_dense"],
            )
            certificates.append(_certificate(f"tradeoff geom p={p} beta={beta}", sol))
            rows.append(
                [beta, "geometric", p, sol.pfa, sol.pmd, sol.err_sum, 1.0 - sol.pout, sol.gap]
            )
    header = ["beta", "W_policy", "p", "pfa", "pmd", "err_sum", "one_minus_pout", "gap"]
    return "tradeoff", header, rows, certificates, {"tau": tau}


def cmd_equilibrium(cfg, full_grids):
    """Joint-strategy equilibria over the (alpha, beta) lists with per-run
    sensor-count marginals and operating points."""
    params, tau, grid, space = _system_objects(cfg, full_grids)
    payoff = build_payoff(
        grid, space, params, tau,
        max_entries=cfg["solver"]["max_entries"],
        materialize=not full_grids,
    )
    rows = []
    certificates = []
    header = ["alpha", "beta", "value", "gap", "expected_w", "pfa", "pmd", "err_sum", "one_minus_pout"]
    header += [f"w_marginal_{w}" for w in cfg["w_set"]]
    for alpha in cfg["alpha_list"]:
        for beta in cfg["beta_list"]:
            sol = _solve(payoff.with_weights(float(alpha), float(beta)), cfg, full_grids)
            certificates.append(_certificate(f"equilibrium alpha={alpha} beta={beta}", sol))
            w_marginal, _ = marginals(sol.fc)
            rows.append(
                [alpha, beta, sol.value, sol.gap, sol.expected_w, sol.pfa, sol.pmd,
                 sol.err_sum, 1.0 - sol.pout, *w_marginal.tolist()]
            )
    return "equilibrium", header, rows, certificates, {"tau": tau}


def cmd_ew_sweep(cfg, full_grids):
    """Expected active sensor count versus deployment cost and detection weight."""
    params, tau, grid, space = _system_objects(cfg, full_grids)
    payoff = build_payoff(
        grid, space, params, tau,
        max_entries=cfg["solver"]["max_entries"],
        materialize=not full_grids,
    )
    rows = []
    certificates = []
    for alpha in cfg["alpha_list"]:
        sol = _solve(payoff.with_weights(float(alpha), params.beta), cfg, full_grids)
        certificates.append(_certificate(f"ew-sweep alpha={alpha}", sol))
        rows.append(["alpha", alpha, params.beta, sol.expected_w, sol.value, sol.gap])
    for beta in cfg["beta_list"]:
        sol = _solve(payoff.with_weights(params.alpha, float(beta)), cfg, full_grids)
        certificates.append(_certificate(f"ew-sweep beta={beta}", sol))
        rows.append(["beta", params.alpha, beta, sol.expected_w, sol.value, sol.gap])
    header = ["sweep", "alpha", "beta", "expected_w", "value", "gap"]
    return "ew_sweep", header, rows, certificates, {"tau": tau}


def cmd_geometric(cfg, full_grids):
    """Geometric-deployment baseline metrics over the (p, beta) lists."""
    params, tau, grid, space = _system_objects(cfg, full_grids)
    rows = []
    certificates = []
    for p in cfg["geometric"]["p_list"]:
        dep = GeometricDeployment(float(p), tuple(cfg["geometric"]["support"]))
        for beta in cfg["beta_list"]:
            sol = solve_restricted_equilibrium(
                dep, grid, space, replace(params, beta=float(beta)), tau,
                tol=cfg["solver"]["tol_dense"],
            )
            certificates.append(_certificate(f"geometric p={p} beta={beta}", sol))
            rows.append(
                [p, beta, sol.pfa, sol.pmd, sol.err_sum, 1.0 - sol.pout,
                 sol.expected_w, sol.value, sol.gap]
            )
    header = ["p", "beta", "pfa", "pmd", "err_sum", "one_minus_pout", "expected_w", "value", "gap"]
    return "geometric", header, rows, certificates, {"tau": tau}


def cmd_robustness(cfg, full_grids):
    """Separated-pairs construction plus exclusion and covertness verification."""
    params, tau, _, space = _system_objects(cfg, full_grids)
    rob = cfg["robustness"]
    plan = construct_disjoint_pairs(
        m=rob["m"],
        epsilon=float(rob["epsilon"]),
        w_min=rob["w_min"],
        n_uses=params.n_uses,
        tau=tau,
        sigma_b2=params.sigma_b2,
        sigma_w2=params.sigma_w2,
        outage_target=float(rob["outage_target"]),
        power_caps=(float(rob["alice_cap"]), float(rob["jammer_cap"])),
    )
    probe_thresholds = (
        0.5 * (plan.intervals[0].lo + 1e-9) + 1e-9,
        optimal_threshold(plan.pairs[plan.m // 2], params.sigma_w2),
        2.0 * plan.intervals[-1].hi,
    )
    actions = [
        FcAction(int(w), float(t))
        for w in cfg["w_set"]
        if w >= plan.w_min
        for t in probe_thresholds
    ]
    table = verify_interval_exclusion(plan, actions)
    outside_min = min(
        (float(table[i, k]) for i in range(plan.m) for k, a in enumerate(actions)
         if not plan.intervals[i].contains(a.t)),
        default=float("nan"),
    )
    worst = 1.0
    w_probe = max(max(cfg["w_set"]), plan.w_min)
    for pair in plan.pairs:
        probe_space = FcActionSpace((w_probe,), (optimal_threshold(pair, params.sigma_w2),))
        worst = min(
            worst,
            covertness_probability(plan, FcStrategy.point_mass(probe_space, 0, 0)),
        )
    rows = [
        [i + 1, pair.p_a, pair.p_j, outage_pure(pair, tau, params.sigma_b2),
         interval.lo, interval.hi]
        for i, (pair, interval) in enumerate(zip(plan.pairs, plan.intervals))
    ]
    extras = {
        "tau": tau,
        "epsilon": plan.epsilon,
        "m": plan.m,
        "slack_factor": plan.slack_factor,
        "worst_case_covertness_probability": worst,
        "covertness_bound": 1.0 - 1.0 / plan.m,
        "min_error_sum_outside_intervals": outside_min,
    }
    header = ["pair", "p_a", "p_j", "outage", "interval_lo", "interval_hi"]
    return "robustness", header, rows, [], extras


def cmd_validate(cfg, full_grids):
    """Monte Carlo versus analytic error and outage probabilities."""
    params, tau, _, _ = _system_objects(cfg, full_grids)
    mc = cfg["mc"]
    rng = np.random.default_rng(mc["seed"])
    rows = []
    for case in range(mc["cases"]):
        p_a = float(rng.uniform(0.2, 3.0))
        p_j = float(rng.uniform(0.0, 3.0))
        w = int(rng.choice([1, 2, 4]))
        pair = PowerPair(p_a, p_j)
        mu0 = params.sigma_w2 + p_j
        mu1 = mu0 + p_a
        t = float(rng.uniform(mu0, mu1))
        action = FcAction(w, t)
        det_cfg = SimConfig(mc["detection_trials"], mc["seed"] + 2 * case)
        est = simulate_detection(pair, action, params, det_cfg)
        fa = pfa_pure(p_j, w, t, params.n_uses, params.sigma_w2)
        md = pmd_pure(p_a, p_j, w, t, params.n_uses, params.sigma_w2)
        rows.append(["pfa", case, p_a, p_j, w, t, fa, est.pfa, est.se_pfa,
                     abs(est.pfa - fa) / est.se_pfa if est.se_pfa else 0.0])
        rows.append(["pmd", case, p_a, p_j, w, t, md, est.pmd, est.se_pmd,
                     abs(est.pmd - md) / est.se_pmd if est.se_pmd else 0.0])
        out_cfg = SimConfig(mc["outage_trials"], mc["seed"] + 2 * case + 1)
        est_out = simulate_outage(pair, tau, params.sigma_b2, out_cfg)
        p_out = outage_pure(pair, tau, params.sigma_b2)
        rows.append(["pout", case, p_a, p_j, "", tau, p_out, est_out.p_out, est_out.se,
                     abs(est_out.p_out - p_out) / est_out.se if est_out.se else 0.0])
    header = ["metric", "case", "p_a", "p_j", "w", "t", "analytic", "empirical", "se", "z"]
    return "validate", header, rows, [], {"tau": tau}


_COMMANDS = {
    "threshold-sweep": cmd_threshold_sweep,
    "tradeoff": cmd_tradeoff,
    "equilibrium": cmd_equilibrium,
    "ew-sweep": cmd_ew_sweep,
    "geometric": cmd_geometric,
    "robustness": cmd_robustness,
    "validate": cmd_validate,
}


def _write_outputs(out_dir, name, header, rows, certificates, extras, cfg, args, wall):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    manifest = {
        "subcommand": args.subcommand,
        "version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "wall_time_s": wall,
        "config": cfg,
        "overrides": list(args.set),
        "full_grids": args.full_grids,
        "artifacts": [os.path.basename(csv_path)],
        "certificates": certificates,
        "summary": extras,
    }
    manifest_path = os.path.join(out_dir, f"{name}_manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, manifest_path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covertgame",
        description="Soft-fusion covert-detection experiments: error sweeps, "
        "equilibria, baselines, robustness plans, and Monte Carlo validation.",
    )
    parser.add_argument("--version", action="version", version=f"covertgame {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, fn in _COMMANDS.items():
        cmd = sub.add_parser(name, help=fn.__doc__)
        cmd.add_argument("--config", default=None, help="JSON configuration file")
        cmd.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="PATH=VALUE",
            help="override one config value by dotted path (repeatable)",
        )
        cmd.add_argument(
            "--out",
            default=None,
            help=f"output directory (default: config output_dir or ${OUTPUT_DIR_ENV})",
        )
        cmd.add_argument(
            "--full-grids",
            action="store_true",
            help="use the fine 0.01 mW spacing everywhere; equilibrium runs then "
            "switch to the iterative solver and may take a long time",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
    except ConfigError as exc:
        print(f"covertgame: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or os.environ.get(OUTPUT_DIR_ENV) or cfg["output_dir"]
    start = time.time()
    try:
        name, header, rows, certificates, extras = _COMMANDS[args.subcommand](
            cfg, args.full_grids
        )
    except (SolverConvergenceError, PayoffCapacityError, PlanInfeasibleError) as exc:
        print(f"covertgame: solver error: {exc}", file=sys.stderr)
        if isinstance(exc, SolverConvergenceError) and math.isfinite(exc.best_gap):
            print(f"covertgame: best duality gap achieved: {exc.best_gap:.3e}", file=sys.stderr)
        if isinstance(exc, PlanInfeasibleError):
            print(f"covertgame: pairs achievable under the caps: {exc.achievable_m}", file=sys.stderr)
        return EXIT_SOLVER
    csv_path, manifest_path = _write_outputs(
        out_dir, name, header, rows, certificates, extras, cfg, args, time.time() - start
    )
    print(f"wrote {csv_path}")
    print(f"wrote {manifest_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
