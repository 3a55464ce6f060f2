import math

import numpy as np
import pytest

from covertgame.detection import FcAction, pfa_pure, pmd_pure
from covertgame.montecarlo import SimConfig, simulate_detection, simulate_outage
from covertgame.system import PowerPair, SystemParams, outage_pure

PARAMS = SystemParams(n_uses=200, sigma_b2=1.0, sigma_w2=1.0, rate_target=0.4, upsilon=0.1)
TAU = 0.40727126408362124


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(0, 1)
        with pytest.raises(ValueError):
            SimConfig(10, -1)
        with pytest.raises(ValueError):
            SimConfig(10, 2**64)


class TestSimulateDetection:
    def test_extreme_threshold_limits(self):
        cfg = SimConfig(2000, 99)
        est = simulate_detection(PowerPair(2.0, 2.0), FcAction(1, 500.0), PARAMS, cfg)
        assert est.pfa == 0.0
        assert est.pmd == 1.0

    def test_fig2_point_within_four_sigma(self):
        pair = PowerPair(2.0, 2.0)
        action = FcAction(1, 3.8312)
        cfg = SimConfig(100_000, 2024)
        est = simulate_detection(pair, action, PARAMS, cfg)
        fa = pfa_pure(2.0, 1, 3.8312, 200, 1.0)
        md = pmd_pure(2.0, 2.0, 1, 3.8312, 200, 1.0)
        assert abs(est.pfa - fa) <= 4.0 * math.sqrt(fa * (1 - fa) / cfg.trials)
        assert abs(est.pmd - md) <= 4.0 * math.sqrt(md * (1 - md) / cfg.trials)

    def test_seeded_determinism(self):
        pair = PowerPair(1.0, 0.5)
        action = FcAction(2, 1.8)
        cfg = SimConfig(20_000, 7)
        first = simulate_detection(pair, action, PARAMS, cfg)
        second = simulate_detection(pair, action, PARAMS, cfg)
        assert first == second

    def test_different_seeds_differ(self):
        pair = PowerPair(1.0, 0.5)
        action = FcAction(1, 1.8)
        a = simulate_detection(pair, action, PARAMS, SimConfig(20_000, 1))
        b = simulate_detection(pair, action, PARAMS, SimConfig(20_000, 2))
        assert (a.pfa, a.pmd) != (b.pfa, b.pmd)

    def test_reported_standard_errors(self):
        est = simulate_detection(
            PowerPair(2.0, 0.0), FcAction(1, 2.0), PARAMS, SimConfig(10_000, 3)
        )
        assert est.se_pfa == pytest.approx(
            math.sqrt(est.pfa * (1 - est.pfa) / est.trials), abs=1e-15
        )


class TestSimulateOutage:
    def test_no_jamming_closed_form(self):
        pair = PowerPair(2.0, 0.0)
        cfg = SimConfig(1_000_000, 11)
        est = simulate_outage(pair, TAU, 1.0, cfg)
        expected = 1.0 - math.exp(-TAU * 1.0 / 2.0)
        assert abs(est.p_out - expected) <= 4.0 * math.sqrt(expected * (1 - expected) / cfg.trials)

    def test_matches_interference_formula(self):
        pair = PowerPair(2.0, 2.0)
        cfg = SimConfig(1_000_000, 12)
        est = simulate_outage(pair, TAU, 1.0, cfg)
        expected = outage_pure(pair, TAU, 1.0)
        assert abs(est.p_out - expected) <= 4.0 * math.sqrt(expected * (1 - expected) / cfg.trials)

    def test_vanishing_threshold(self):
        est = simulate_outage(PowerPair(2.0, 1.0), 1e-9, 1.0, SimConfig(100_000, 13))
        assert est.p_out == pytest.approx(0.0, abs=1e-4)

    def test_seeded_determinism(self):
        pair = PowerPair(1.5, 0.7)
        a = simulate_outage(pair, TAU, 1.0, SimConfig(300_000, 21))
        b = simulate_outage(pair, TAU, 1.0, SimConfig(300_000, 21))
        assert a == b


class TestAgreementSweep:
    def test_random_configurations_within_four_sigma(self):
        rng = np.random.default_rng(1001)
        for case in range(8):
            p_a = float(rng.uniform(0.3, 3.0))
            p_j = float(rng.uniform(0.0, 3.0))
            w = int(rng.choice([1, 2, 4]))
            pair = PowerPair(p_a, p_j)
            mu0 = 1.0 + p_j
            t = float(rng.uniform(mu0, mu0 + p_a))
            est = simulate_detection(pair, FcAction(w, t), PARAMS, SimConfig(30_000, 500 + case))
            fa = pfa_pure(p_j, w, t, 200, 1.0)
            md = pmd_pure(p_a, p_j, w, t, 200, 1.0)
            tol_fa = 4.0 * math.sqrt(max(fa * (1 - fa), 1e-12) / est.trials)
            tol_md = 4.0 * math.sqrt(max(md * (1 - md), 1e-12) / est.trials)
            assert abs(est.pfa - fa) <= tol_fa
            assert abs(est.pmd - md) <= tol_md
