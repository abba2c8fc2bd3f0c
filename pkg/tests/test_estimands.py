import math
from unittest import TestCase

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from src.covariance.covariance import effect_covariance
from src.estimands.estimands import (
    continuous_ppr,
    contrast_variance,
    covariance_decomposition_check,
    cs_variance_ratio,
    delta_ppr_estimate,
    delta_ppr_smart,
    discrete_ppr,
    ols_consistency_margin,
    optimal_snr,
    ppr_ratio,
    relative_metrics,
    wls_slope_beta,
)
from src.model.covariance import ArWithK, CompoundSymmetric, EffectCovariance
from src.model.estimate import EstimateBundle, PprResult
from src.model.grid import TimeGrid
from src.model.trajectory import ScenarioId, TrajectoryFn
from src.model.weight import (
    AUC,
    CFB,
    OLS,
    BetaWeight,
    PartialAucWeight,
    PowerAucWeight,
    cfb_ols_average,
)
from src.trajectories.scenarios import control_mean, effect_cumulative, effect_trajectory
from src.util.errors import InvalidArgumentError, ModelError
from src.weights.weights import (
    auc_discrete_weights,
    cfb_discrete_weights,
    contrast_from_weights,
    endpoint_contrast,
    ols_discrete_weights,
    resolve_contrast,
)

DECREASING_WEIGHTS = [AUC, PartialAucWeight(), PowerAucWeight(alpha=2), PowerAucWeight(alpha=0.5)]


def linear(slope: float) -> TrajectoryFn:
    return TrajectoryFn(
        value=lambda t: slope * np.asarray(t, dtype=float),
        derivative=lambda t: np.full_like(np.asarray(t, dtype=float), slope),
        label="linear",
    )


def bundle(grid: TimeGrid, delta, matrix) -> EstimateBundle:
    return EstimateBundle(
        grid=grid,
        delta_hat=tuple(float(d) for d in delta),
        sigma_hat=EffectCovariance.from_array(grid, np.asarray(matrix, dtype=float)),
    )


def random_spd(rng: np.random.Generator, m: int) -> np.ndarray:
    x = rng.normal(size=(m, m))
    a = x @ x.T + 0.1 * np.eye(m)
    return a / np.diag(a).max()


class TestPpr(TestCase):
    def test_discrete_examples(self):
        grid = TimeGrid.equal_spaced(6)
        for dw in [cfb_discrete_weights(grid), ols_discrete_weights(grid), auc_discrete_weights(6)]:
            assert math.isclose(discrete_ppr(3 * grid.as_array(), dw), 3.0)
        assert discrete_ppr([0.5, 9.0], cfb_discrete_weights(TimeGrid.equal_spaced(2))) == 8.5
        ols3 = ols_discrete_weights(TimeGrid.equal_spaced(3))
        assert math.isclose(discrete_ppr([0.0, 0.0, 1.0], ols3), 1.0)

    def test_discrete_length_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            discrete_ppr([1.0, 2.0], cfb_discrete_weights(TimeGrid.equal_spaced(3)))

    def test_continuous_examples(self):
        f = control_mean()
        assert math.isclose(continuous_ppr(f, CFB), 8.5, abs_tol=1e-10)
        for spec in [CFB, OLS, AUC, PartialAucWeight(), PowerAucWeight(alpha=3), cfb_ols_average()]:
            assert math.isclose(continuous_ppr(linear(2.5), spec), 2.5, abs_tol=1e-10), spec

    def test_continuous_needs_nodes(self):
        with self.assertRaises(InvalidArgumentError):
            continuous_ppr(control_mean(), OLS, nodes=4)

    def test_weighted_least_squares_identity(self):
        f = control_mean()
        for a, b in [(2, 2), (3, 2), (2, 3), (4, 4)]:
            assert abs(continuous_ppr(f, BetaWeight(a=a, b=b)) - wls_slope_beta(f, a, b)) <= 1e-8

    def test_weighted_least_squares_recovers_line(self):
        assert math.isclose(wls_slope_beta(linear(-1.5), 3, 5), -1.5, rel_tol=1e-10)
        with self.assertRaises(InvalidArgumentError):
            wls_slope_beta(linear(1.0), 1, 2)

    def test_node_convergence(self):
        f = effect_trajectory(ScenarioId.INC_THEN_DEC)
        for spec in [OLS, AUC]:
            assert abs(continuous_ppr(f, spec, 32) - continuous_ppr(f, spec, 64)) <= 1e-9


class TestDeltaEstimate(TestCase):
    def test_compound_symmetric_variances(self):
        s2, tau = 2.0, 0.8
        m = 5
        grid = TimeGrid.equal_spaced(m)
        matrix = np.full((m, m), tau) + (s2 - tau) * np.eye(m)
        b = bundle(grid, np.zeros(m), matrix)
        cfb = delta_ppr_estimate(b, endpoint_contrast(grid), "cfb")
        assert math.isclose(cfb.variance, 2 * (s2 - tau))
        assert cfb.point == 0.0 and cfb.z_squared == 0.0
        ols = contrast_from_weights(ols_discrete_weights(grid))
        result = delta_ppr_estimate(b, ols, "ols")
        assert math.isclose(result.variance, (s2 - tau) * float(np.sum(ols.as_array() ** 2)))

    def test_point_and_z_squared(self):
        grid = TimeGrid.equal_spaced(2)
        b = bundle(grid, [0.0, 8.5], np.eye(2))
        result = delta_ppr_estimate(b, endpoint_contrast(grid), "cfb")
        assert result.point == 8.5
        assert math.isclose(result.se, math.sqrt(2))
        assert math.isclose(result.z_squared, 8.5**2 / 2)

    def test_grid_mismatch(self):
        b = bundle(TimeGrid.equal_spaced(3), [0, 1, 2], np.eye(3))
        with self.assertRaises(InvalidArgumentError):
            delta_ppr_estimate(b, endpoint_contrast(TimeGrid(points=(0.0, 0.4, 1.0))))

    def test_negative_variance(self):
        c = endpoint_contrast(TimeGrid.equal_spaced(2))
        with self.assertRaises(ModelError):
            contrast_variance(c, np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_bundle_alignment(self):
        grid = TimeGrid.equal_spaced(3)
        with self.assertRaises(ValueError):
            bundle(grid, [0.0, 1.0], np.eye(3))

    def test_zero_variance_result(self):
        assert PprResult.from_point_variance("x", 0.0, 0.0).z_squared == 0.0
        assert PprResult.from_point_variance("x", 1.0, 0.0).z_squared == math.inf


class TestSmart(TestCase):
    def test_uncorrelated_baseline(self):
        grid = TimeGrid.equal_spaced(4)
        matrix = np.array(
            [[1.0, 0, 0, 0], [0, 2.0, 0.5, 0.3], [0, 0.5, 2.0, 0.5], [0, 0.3, 0.5, 2.0]]
        )
        b = bundle(grid, [0.2, 1.0, 2.0, 3.0], matrix)
        c = contrast_from_weights(ols_discrete_weights(grid))
        smart = delta_ppr_smart(b, c)
        plain_without_baseline = float(np.dot(c.as_array()[1:], b.delta_array()[1:]))
        assert math.isclose(smart.point, plain_without_baseline)
        v = c.as_array()[1:]
        assert math.isclose(smart.variance, float(v @ matrix[1:, 1:] @ v))

    def test_zero_baseline_estimate(self):
        grid = TimeGrid.equal_spaced(5)
        sigma = effect_covariance(ArWithK(rho=0.6, k=0.8, sigma_end=math.sqrt(3)), grid)
        b = EstimateBundle(grid=grid, delta_hat=(0.0, 0.3, 0.5, 0.8, 1.0), sigma_hat=sigma)
        c = contrast_from_weights(auc_discrete_weights(5))
        assert math.isclose(delta_ppr_smart(b, c).point, delta_ppr_estimate(b, c).point)

    def test_auc_variance_reduced(self):
        grid = TimeGrid.equal_spaced(5)
        sigma = effect_covariance(CompoundSymmetric(sd=1.0, corr=0.6), grid)
        b = EstimateBundle(grid=grid, delta_hat=(0.0,) * 5, sigma_hat=sigma)
        c = contrast_from_weights(auc_discrete_weights(5))
        assert delta_ppr_smart(b, c).variance < delta_ppr_estimate(b, c).variance

    def test_dominance_over_random_covariances(self):
        rng = np.random.default_rng(7)
        specs = [CFB, OLS, AUC, PartialAucWeight(), PowerAucWeight(alpha=2), cfb_ols_average()]
        for _ in range(1000):
            m = int(rng.integers(2, 11))
            grid = TimeGrid.equal_spaced(m)
            matrix = random_spd(rng, m)
            b = bundle(grid, rng.normal(size=m), matrix)
            for spec in specs:
                _, c = resolve_contrast(spec, grid)
                smart = delta_ppr_smart(b, c)
                plain = delta_ppr_estimate(b, c)
                assert smart.variance <= plain.variance + 1e-12
            uncorrelated = matrix.copy()
            uncorrelated[0, 1:] = uncorrelated[1:, 0] = 0.0
            b = bundle(grid, rng.normal(size=m), uncorrelated)
            c = contrast_from_weights(ols_discrete_weights(grid))
            v = c.as_array()
            expected = delta_ppr_estimate(b, c).variance - v[0] ** 2 * uncorrelated[0, 0]
            assert math.isclose(delta_ppr_smart(b, c).variance, expected, rel_tol=1e-9, abs_tol=1e-12)


class TestOptimalSnr(TestCase):
    def test_identity(self):
        assert math.isclose(optimal_snr([0, 0, 0, 1], np.eye(4)), 1.0)

    def test_equality_case(self):
        rng = np.random.default_rng(3)
        sigma = random_spd(rng, 6)
        c = rng.normal(size=6)
        delta = 2.5 * sigma @ c
        contrast_snr = float(c @ delta) ** 2 / float(c @ sigma @ c)
        assert math.isclose(optimal_snr(delta, sigma), contrast_snr, rel_tol=1e-9)

    def test_constant_scenario_matches_dense_inverse(self):
        grid = TimeGrid.equal_spaced(5)
        sigma = effect_covariance(ArWithK(rho=0.6, k=0.6, sigma_end=math.sqrt(2)), grid)
        delta = effect_cumulative(ScenarioId.CONSTANT, grid.as_array())
        oracle = float(delta @ np.linalg.inv(sigma.as_array()) @ delta)
        assert math.isclose(optimal_snr(delta, sigma), oracle, rel_tol=1e-10)

    def test_bounds_every_contrast(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            m = int(rng.integers(2, 11))
            sigma = random_spd(rng, m)
            delta = rng.normal(size=m)
            c = rng.normal(size=m)
            snr = float(c @ delta) ** 2 / float(c @ sigma @ c)
            assert snr <= optimal_snr(delta, sigma) * (1 + 1e-9) + 1e-9


class TestClosedForms(TestCase):
    def test_cs_variance_ratio(self):
        assert math.isclose(cs_variance_ratio(5), 0.8)
        assert round(cs_variance_ratio(8), 2) == 0.58
        assert cs_variance_ratio(2) == 1.0
        with self.assertRaises(InvalidArgumentError):
            cs_variance_ratio(1)

    def test_cs_variance_ratio_matches_matrix(self):
        for m in range(3, 13):
            grid = TimeGrid.equal_spaced(m)
            for sd, corr in [(1.0, 0.6), (2.0, 0.1), (0.5, 0.9)]:
                sigma = effect_covariance(CompoundSymmetric(sd=sd, corr=corr), grid)
                ols = contrast_from_weights(ols_discrete_weights(grid))
                ratio = contrast_variance(ols, sigma) / contrast_variance(endpoint_contrast(grid), sigma)
                assert abs(ratio - cs_variance_ratio(m)) <= 1e-10

    def test_squared_contrast_identity(self):
        # sum v_i^2 = 1 / sum (t_i - tbar)^2 for the OLS contrast
        for m in range(2, 10):
            t = TimeGrid.equal_spaced(m).as_array()
            v = contrast_from_weights(ols_discrete_weights(TimeGrid.equal_spaced(m))).as_array()
            assert math.isclose(float(np.sum(v**2)), 1 / float(np.sum((t - t.mean()) ** 2)))


class TestRelativeMetrics(TestCase):
    def test_identity(self):
        r = PprResult.from_point_variance("cfb", 1.0, 0.5)
        metrics = relative_metrics(r, 1.0, r, 1.0)
        assert (metrics.signal_pct, metrics.se_pct, metrics.rel_sample_size_pct) == (100.0, 100.0, 100.0)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    @settings(max_examples=300, deadline=None)
    def test_identity_is_exact(self, signal: float, variance: float):
        r = PprResult.from_point_variance("cfb", signal, variance)
        metrics = relative_metrics(r, signal, r, signal)
        assert metrics.rel_sample_size_pct == 100.0
        assert metrics.se_pct == 100.0
        assert metrics.signal_pct == 100.0

    def test_signal_gain(self):
        ref = PprResult.from_point_variance("cfb", 1.0, 0.5)
        metrics = relative_metrics(ref, 1.2, ref, 1.0)
        assert math.isclose(metrics.rel_sample_size_pct, 100 / 1.44)

    def test_variance_reduction(self):
        ref = PprResult.from_point_variance("cfb", 1.0, 1.0)
        cand = PprResult.from_point_variance("ols", 1.0, 0.58)
        assert math.isclose(relative_metrics(cand, 1.0, ref, 1.0).rel_sample_size_pct, 58.0)

    def test_zero_candidate_signal(self):
        ref = PprResult.from_point_variance("cfb", 1.0, 1.0)
        cand = PprResult.from_point_variance("ols", 0.0, 0.3)
        assert relative_metrics(cand, 0.0, ref, 1.0).rel_sample_size_pct is None

    def test_invalid_reference(self):
        ref = PprResult.from_point_variance("cfb", 0.0, 1.0)
        with self.assertRaises(InvalidArgumentError):
            relative_metrics(ref, 1.0, ref, 0.0)
        with self.assertRaises(InvalidArgumentError):
            relative_metrics(ref, 1.0, PprResult.from_point_variance("cfb", 1.0, 0.0), 1.0)


class TestRatioAndDecomposition(TestCase):
    def test_ppr_ratio(self):
        assert ppr_ratio(3.0, 3.0) == 1.0
        with self.assertRaises(InvalidArgumentError):
            ppr_ratio(1.0, 0.0)

    @given(st.sampled_from([CFB, OLS, AUC, PartialAucWeight(), PowerAucWeight(alpha=2), BetaWeight(a=3, b=2)]))
    @settings(max_examples=20, deadline=None)
    def test_ppr_ratio_weight_invariant_under_proportional_rates(self, spec):
        f = control_mean()
        h = f.scaled(0.7)
        ratio = ppr_ratio(continuous_ppr(h, spec), continuous_ppr(f, spec))
        assert math.isclose(ratio, 0.7, abs_tol=1e-8)

    def test_decomposition_holds(self):
        for s in ScenarioId:
            for spec in [CFB, OLS, AUC, PowerAucWeight(alpha=2)]:
                check = covariance_decomposition_check(s, spec)
                assert abs(check.lhs - check.rhs) <= 1e-8, (s, spec)

    def test_decomposition_constant_scenario(self):
        check = covariance_decomposition_check(ScenarioId.CONSTANT, AUC)
        assert math.isclose(check.lhs, 1.0, abs_tol=1e-12)
        assert math.isclose(check.rhs, 1.0, abs_tol=1e-12)

    def test_decomposition_sign(self):
        decreasing = covariance_decomposition_check(ScenarioId.DECREASING, AUC)
        assert decreasing.lhs > effect_cumulative(ScenarioId.DECREASING, 1.0)
        increasing = covariance_decomposition_check(ScenarioId.INCREASING, AUC)
        assert increasing.lhs < effect_cumulative(ScenarioId.INCREASING, 1.0)

    def test_decreasing_weights_are_consistent(self):
        for s in ScenarioId:
            for spec in DECREASING_WEIGHTS:
                assert continuous_ppr(effect_trajectory(s), spec) > 0

    def test_ols_consistency_condition(self):
        for s in ScenarioId:
            ols = continuous_ppr(effect_trajectory(s), OLS)
            assert np.sign(ols) == np.sign(ols_consistency_margin(s))
