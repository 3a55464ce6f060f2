import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covertgame.detection import (
    FcAction,
    FcActionSpace,
    HypothesisMeans,
    argmin_threshold,
    detection_tables,
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
from covertgame.system import PowerGrid, PowerPair, SystemParams

PARAMS = SystemParams(n_uses=200, sigma_b2=1.0, sigma_w2=1.0, rate_target=0.4, upsilon=0.1)
FIG2_PAIR = PowerPair(2.0, 2.0)
FIG2_TSTAR = 3.8312


def mc_detection_oracle(pair, w, t, n_uses, sigma_w2, blocks=10**5, seed=77):
    """Direct simulation of the fused energy test (independent of the Gamma path)."""
    rng = np.random.default_rng(seed)
    mu0 = sigma_w2 + pair.p_j
    mu1 = mu0 + pair.p_a
    fa = md = 0
    chunk = max(1, 2_000_000 // (w * n_uses))
    done = 0
    while done < blocks:
        n = min(chunk, blocks - done)
        quiet = rng.exponential(mu0, (n, w * n_uses)).mean(axis=1)
        busy = rng.exponential(mu1, (n, w * n_uses)).mean(axis=1)
        fa += int(np.count_nonzero(quiet > t))
        md += int(np.count_nonzero(busy <= t))
        done += n
    return fa / blocks, md / blocks


class TestActionTypes:
    def test_action_validation(self):
        with pytest.raises(ValueError):
            FcAction(0, 1.0)
        with pytest.raises(ValueError):
            FcAction(1, 0.0)

    def test_space_ordering(self):
        with pytest.raises(ValueError):
            FcActionSpace((4, 1), (1.0, 2.0))
        with pytest.raises(ValueError):
            FcActionSpace((1, 4), (2.0, 1.0))
        with pytest.raises(ValueError):
            FcActionSpace((1,), ())

    def test_space_never_includes_zero_threshold(self):
        with pytest.raises(ValueError):
            FcActionSpace((1,), (0.0, 1.0))

    def test_flat_index_layout(self):
        space = FcActionSpace((1, 4), (0.5, 1.0, 1.5))
        assert space.size == 6
        assert space.action(0) == FcAction(1, 0.5)
        assert space.action(2) == FcAction(1, 1.5)
        assert space.action(3) == FcAction(4, 0.5)

    def test_means(self):
        means = HypothesisMeans.for_pair(PowerPair(2.0, 2.0), 1.0)
        assert means.mu0 == 3.0
        assert means.mu1 == 5.0
        with pytest.raises(ValueError):
            HypothesisMeans(2.0, 2.0)


class TestPureErrors:
    def test_pfa_exponential_tail(self):
        # W = N = 1: the statistic is a single exponential with mean mu0
        t = (1.0 + 0.7) * math.log(2.0)
        assert pfa_pure(0.7, 1, t, 1, 1.0) == pytest.approx(0.5, abs=1e-14)

    def test_pfa_tiny_threshold_fires_always(self):
        assert pfa_pure(2.0, 4, 1e-12, 200, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_pmd_tiny_threshold_never_misses(self):
        assert pmd_pure(2.0, 2.0, 4, 1e-12, 200, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_pmd_exponential_median(self):
        mu1 = 1.0 + 2.0 + 2.0
        assert pmd_pure(2.0, 2.0, 1, mu1 * math.log(2.0), 1, 1.0) == pytest.approx(
            0.5, abs=1e-14
        )

    def test_pfa_against_monte_carlo(self):
        t = FIG2_TSTAR
        analytic = pfa_pure(2.0, 4, t, 200, 1.0)
        empirical, _ = mc_detection_oracle(FIG2_PAIR, 4, t, 200, 1.0)
        sigma = math.sqrt(max(analytic * (1 - analytic), 1e-12) / 10**5)
        assert abs(empirical - analytic) <= 4.0 * sigma

    def test_fig2_point_against_monte_carlo(self):
        fa_analytic = pfa_pure(2.0, 1, FIG2_TSTAR, 200, 1.0)
        md_analytic = pmd_pure(2.0, 2.0, 1, FIG2_TSTAR, 200, 1.0)
        fa_emp, md_emp = mc_detection_oracle(FIG2_PAIR, 1, FIG2_TSTAR, 200, 1.0)
        for analytic, empirical in ((fa_analytic, fa_emp), (md_analytic, md_emp)):
            sigma = math.sqrt(max(analytic * (1 - analytic), 1e-12) / 10**5)
            assert abs(empirical - analytic) <= 4.0 * sigma

    def test_error_sum_indistinguishable_hypotheses(self):
        pair = PowerPair(1e-6, 2.0)
        t_star = optimal_threshold(pair, 1.0)
        action = FcAction(1, t_star)
        assert error_sum_pure(pair, action, PARAMS) == pytest.approx(1.0, abs=1e-3)

    def test_scale_invariance(self):
        for c in (0.1, 10.0):
            base = pfa_pure(2.0, 4, 3.8, 200, 1.0)
            scaled = pfa_pure(c * 2.0, 4, c * 3.8, 200, c * 1.0)
            assert scaled == pytest.approx(base, rel=1e-12)
            base_md = pmd_pure(2.0, 2.0, 4, 3.8, 200, 1.0)
            scaled_md = pmd_pure(c * 2.0, c * 2.0, 4, c * 3.8, 200, c * 1.0)
            assert scaled_md == pytest.approx(base_md, rel=1e-12)


class TestOptimalThreshold:
    def test_fig2_value(self):
        assert optimal_threshold(FIG2_PAIR, 1.0) == pytest.approx(FIG2_TSTAR, abs=5e-5)

    def test_hand_evaluated_log_ratio_one(self):
        pair = PowerPair(math.e - 1.0, 0.0)
        assert optimal_threshold(pair, 1.0) == pytest.approx(
            math.e / (math.e - 1.0), rel=1e-12
        )

    @given(
        st.floats(0.01, 50.0),
        st.floats(0.0, 50.0),
        st.floats(0.05, 20.0),
        st.sampled_from([0.1, 10.0]),
    )
    @settings(max_examples=60, deadline=None)
    def test_homogeneity(self, p_a, p_j, sigma_w2, c):
        base = optimal_threshold(PowerPair(p_a, p_j), sigma_w2)
        scaled = optimal_threshold(PowerPair(c * p_a, c * p_j), c * sigma_w2)
        assert scaled == pytest.approx(c * base, rel=1e-10)

    @given(st.floats(0.01, 100.0), st.floats(0.0, 100.0), st.floats(0.05, 20.0))
    @settings(max_examples=100, deadline=None)
    def test_strictly_between_hypothesis_means(self, p_a, p_j, sigma_w2):
        pair = PowerPair(p_a, p_j)
        means = HypothesisMeans.for_pair(pair, sigma_w2)
        t_star = optimal_threshold(pair, sigma_w2)
        assert means.mu0 < t_star < means.mu1

    def test_minimizes_over_sweep(self):
        thresholds = np.arange(0.01, 6.0, 0.01)
        curve = error_sum_curve(FIG2_PAIR, 1, 200, 1.0, thresholds)
        best = thresholds[np.argmin(curve)]
        assert abs(best - optimal_threshold(FIG2_PAIR, 1.0)) <= 0.01 + 1e-12


class TestErrorDerivative:
    def test_zero_at_optimum(self):
        t_star = optimal_threshold(FIG2_PAIR, 1.0)
        deriv = error_derivative(t_star, FIG2_PAIR, 1, 200, 1.0)
        # scale of the two log-space terms at the stationary point
        means = HypothesisMeans.for_pair(FIG2_PAIR, 1.0)
        shape = 200.0
        b = shape / means.mu1
        scale = math.exp(
            math.log(b) + (shape - 1.0) * math.log(b * t_star) - b * t_star - math.lgamma(shape)
        )
        assert abs(deriv) <= 1e-8 * scale

    def test_sign_pattern(self):
        # derivative magnitudes deep in the tails can underflow to exact zero;
        # zeros carry no sign information, every representable probe must have
        # the right sign and each side needs a healthy number of them
        rng = np.random.default_rng(5)
        for w in (1, 4):
            for _ in range(5):
                pair = PowerPair(float(rng.uniform(0.3, 3.0)), float(rng.uniform(0.0, 3.0)))
                t_star = optimal_threshold(pair, 1.0)
                left = [
                    error_derivative(frac * t_star, pair, w, 200, 1.0)
                    for frac in np.linspace(0.05, 0.995, 50)
                ]
                right = [
                    error_derivative(frac * t_star, pair, w, 200, 1.0)
                    for frac in np.linspace(1.005, 3.0, 50)
                ]
                left_nonzero = [d for d in left if d != 0.0]
                right_nonzero = [d for d in right if d != 0.0]
                assert len(left_nonzero) >= 25 and all(d < 0.0 for d in left_nonzero)
                assert len(right_nonzero) >= 25 and all(d > 0.0 for d in right_nonzero)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            pair = PowerPair(float(rng.uniform(0.3, 3.0)), float(rng.uniform(0.0, 3.0)))
            w = int(rng.choice([1, 4]))
            t_star = optimal_threshold(pair, 1.0)
            for frac in rng.uniform(0.3, 2.5, 5):
                t = frac * t_star
                h = 1e-6 * t
                fd = (
                    error_sum_pure(pair, FcAction(w, t + h), PARAMS)
                    - error_sum_pure(pair, FcAction(w, t - h), PARAMS)
                ) / (2 * h)
                analytic = error_derivative(t, pair, w, 200, 1.0)
                assert abs(analytic - fd) <= max(1e-6, 1e-4 * abs(analytic))

    def test_domain_error(self):
        with pytest.raises(ValueError):
            error_derivative(0.0, FIG2_PAIR, 1, 200, 1.0)


class TestWIndependence:
    def test_argmin_identical_across_sensor_counts(self):
        rng = np.random.default_rng(42)
        step = 0.001
        checked = 0
        while checked < 25:
            pair = PowerPair(float(rng.uniform(0.3, 3.0)), float(rng.uniform(0.0, 3.0)))
            means = HypothesisMeans.for_pair(pair, 1.0)
            thresholds = np.arange(
                max(step, 0.8 * means.mu0), 1.2 * means.mu1, step
            )
            indices = [argmin_threshold(pair, w, 200, 1.0, thresholds) for w in (1, 4, 16, 64)]
            assert max(indices) - min(indices) <= 1
            t_star = optimal_threshold(pair, 1.0)
            assert abs(thresholds[indices[0]] - t_star) <= step + 1e-12
            checked += 1

    def test_log_curve_handles_underflow_plateau(self):
        pair = PowerPair(2.0, 0.01)
        thresholds = np.arange(0.001, 6.0, 0.001)
        linear = error_sum_curve(pair, 64, 200, 1.0, thresholds)
        assert (linear == 0.0).any()  # double precision floors to exact zero here
        log_curve = log_error_sum_curve(pair, 64, 200, 1.0, thresholds)
        assert np.all(np.isfinite(log_curve))
        best = thresholds[np.argmin(log_curve)]
        assert abs(best - optimal_threshold(pair, 1.0)) <= 0.001 + 1e-12

    def test_ties_resolve_to_smallest_threshold(self):
        # constant curve section: argmin must return the first index
        thresholds = np.array([1.0, 2.0, 3.0])
        pair = PowerPair(1e-9, 0.0)  # hypotheses indistinguishable, curve flat at 1
        idx = argmin_threshold(pair, 1, 1, 1.0, thresholds)
        assert idx == 0


class TestAveragedErrors:
    def setup_method(self):
        self.grid = PowerGrid((0.5, 1.0, 2.0), (0.01, 1.0, 2.0))
        self.space = FcActionSpace((1, 4), (1.0, 3.0))
        self.params = PARAMS

    def test_point_masses_reduce_to_pure(self):
        aj = np.zeros((3, 3))
        aj[2, 1] = 1.0
        fc = np.zeros((2, 2))
        fc[1, 0] = 1.0
        fa = pfa_avg(aj, fc, self.grid, self.space, self.params)
        md = pmd_avg(aj, fc, self.grid, self.space, self.params)
        assert fa == pytest.approx(pfa_pure(1.0, 4, 1.0, 200, 1.0), abs=1e-15)
        assert md == pytest.approx(pmd_pure(2.0, 1.0, 4, 1.0, 200, 1.0), abs=1e-15)

    def test_fc_uniform_is_mean_of_conditionals(self):
        aj = np.zeros((3, 3))
        aj[0, 0] = 1.0
        fc_a = np.zeros((2, 2))
        fc_a[0, 0] = 1.0
        fc_b = np.zeros((2, 2))
        fc_b[1, 1] = 1.0
        fc_mix = 0.5 * fc_a + 0.5 * fc_b
        mixed = pfa_avg(aj, fc_mix, self.grid, self.space, self.params)
        mean = 0.5 * (
            pfa_avg(aj, fc_a, self.grid, self.space, self.params)
            + pfa_avg(aj, fc_b, self.grid, self.space, self.params)
        )
        assert mixed == pytest.approx(mean, abs=1e-14)

    def test_uniform_everywhere_against_summation_oracle(self):
        aj = np.full((3, 3), 1.0 / 9.0)
        fc = np.full((2, 2), 0.25)
        fa = pfa_avg(aj, fc, self.grid, self.space, self.params)
        md = pmd_avg(aj, fc, self.grid, self.space, self.params)
        fa_oracle = 0.0
        md_oracle = 0.0
        for i, p_a in enumerate(self.grid.alice_levels):
            for j, p_j in enumerate(self.grid.jammer_levels):
                for w in self.space.w_set:
                    for t in self.space.thresholds:
                        fa_oracle += pfa_pure(p_j, w, t, 200, 1.0) / 36.0
                        md_oracle += pmd_pure(p_a, p_j, w, t, 200, 1.0) / 36.0
        assert fa == pytest.approx(fa_oracle, abs=1e-13)
        assert md == pytest.approx(md_oracle, abs=1e-13)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            pfa_avg(np.full((2, 2), 0.25), np.full((2, 2), 0.25), self.grid, self.space, self.params)
        with pytest.raises(ValueError):
            pfa_avg(np.full((3, 3), 1 / 9), np.full((3, 2), 1 / 6), self.grid, self.space, self.params)

    def test_tables_match_scalar_functions_bitwise(self):
        pfa_t, pmd_t = detection_tables(self.grid, self.space, 200, 1.0)
        for j, p_j in enumerate(self.grid.jammer_levels):
            for k in range(self.space.size):
                action = self.space.action(k)
                assert pfa_t[j, k] == pfa_pure(p_j, action.w, action.t, 200, 1.0)
        for i, p_a in enumerate(self.grid.alice_levels):
            for j, p_j in enumerate(self.grid.jammer_levels):
                for k in range(self.space.size):
                    action = self.space.action(k)
                    assert pmd_t[i * 3 + j, k] == pmd_pure(p_a, p_j, action.w, action.t, 200, 1.0)
