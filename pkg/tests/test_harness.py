import math

import numpy as np
import pytest

from degenbranch import ParameterDomainError, StableIndexVector, standard_gaussian
from degenbranch.harness import (ExperimentConfig, cross_time_correlation,
                                 estimate_variance, evaluate_gates,
                                 log_corrected_fit, normality_test,
                                 predicted_exponent, predicted_limit_variance,
                                 run_experiment, scaling_exponent,
                                 scaling_exponent_bootstrap)

IV_INT = StableIndexVector((2 / 3,))


def _config(**kw):
    base = dict(indices=IV_INT, gamma=1.0, theta=1.0, kappa=0.5,
                n_schedule=(4, 8), replicates=100, phi=standard_gaussian(1),
                t_grid=(0.5, 1.0), master_seed=12)
    base.update(kw)
    return ExperimentConfig(**base)


class TestExperimentConfig:
    def test_rejects_bad_schedules(self):
        with pytest.raises(ParameterDomainError):
            _config(n_schedule=(8, 8))
        with pytest.raises(ParameterDomainError):
            _config(n_schedule=(8, 4))
        with pytest.raises(ParameterDomainError):
            _config(replicates=50)
        with pytest.raises(ParameterDomainError):
            _config(t_grid=(0.5, 1.5))
        with pytest.raises(ParameterDomainError):
            _config(t_grid=())

    def test_snapshot_lattice_check(self):
        with pytest.raises(ParameterDomainError):
            _config(grid_spacing=0.3)

    def test_box_schedule_and_cap(self):
        cfg = _config()
        width, capped = cfg.box_half_width(8)
        assert width == pytest.approx(8.0 ** 1.5, rel=1e-12)
        assert not capped
        cfg = _config(particle_budget=10)
        width, capped = cfg.box_half_width(8)
        assert width == pytest.approx(5.0)


class TestEstimateVariance:
    def test_constant_samples(self, rng):
        est = estimate_variance(np.full(64, 2.5), rng)
        assert est.value == 0.0
        assert est.ci_low == est.ci_high == 0.0

    def test_two_point_samples(self, rng):
        samples = np.array([-1.0, 1.0] * 500)
        est = estimate_variance(samples, rng)
        assert est.value == pytest.approx(1000 / 999, rel=1e-12)

    def test_bootstrap_coverage(self):
        # CI covers the true variance in most meta-trials
        meta = np.random.default_rng(1234)
        hits = 0
        trials = 200
        for _ in range(trials):
            x = meta.standard_normal(10_000)
            est = estimate_variance(x, meta)
            hits += est.ci_low <= 1.0 <= est.ci_high
        assert hits >= 0.93 * trials

    def test_too_few_samples(self, rng):
        with pytest.raises(ParameterDomainError):
            estimate_variance(np.ones(10), rng)


class TestScalingExponent:
    def test_exact_power_law(self):
        n = np.array([8, 16, 32, 64, 128])
        slope, stderr = scaling_exponent(n, n ** 0.75)
        assert slope == pytest.approx(0.75, rel=1e-12)
        assert stderr == pytest.approx(0.0, abs=1e-12)

    def test_two_points(self):
        slope, stderr = scaling_exponent([8, 16], [1.0, 2 ** 0.75])
        assert slope == pytest.approx(0.75, rel=1e-12)
        assert stderr == 0.0

    def test_log_corrected_model_fits_critical_shape(self):
        n = np.array([8, 16, 32, 64, 128], dtype=float)
        log_v = 0.5 * np.log(n) + np.log(np.log(n)) + 0.3
        fits = log_corrected_fit(n, log_v, kappa=0.5)
        assert fits["log_corrected_rse"] < 1e-12
        assert fits["power_rse"] > 1e-3
        assert fits["power_slope"] > 0.5  # ln-correction inflates the raw slope

    def test_bootstrap_slope_interval(self, rng):
        n = np.array([8, 16, 32])
        boot = np.column_stack([np.full(200, v) for v in n ** 0.6])
        lo, hi = scaling_exponent_bootstrap(n, boot)
        assert lo == pytest.approx(0.6, rel=1e-9)
        assert hi == pytest.approx(0.6, rel=1e-9)

    def test_rejects_nonpositive_variance(self):
        with pytest.raises(ParameterDomainError):
            scaling_exponent([8, 16], [1.0, 0.0])


class TestNormalityTest:
    def test_gaussian_samples_pass(self):
        gen = np.random.default_rng(77)
        x = gen.standard_normal(2000)
        res = normality_test(x)
        assert res.ks_statistic < 1.628 / math.sqrt(2000)
        assert abs(res.skewness) < 0.2
        assert abs(res.excess_kurtosis) < 0.4

    def test_exponential_samples_detected(self):
        gen = np.random.default_rng(78)
        x = gen.exponential(size=2000) - 1.0
        res = normality_test(x)
        assert res.skewness > 1.0
        assert res.ks_pvalue < 0.01

    def test_degenerate_rejected(self):
        with pytest.raises(ParameterDomainError):
            normality_test(np.ones(200))


class TestCrossTimeCorrelation:
    def test_duplicated_columns(self, rng):
        x = rng.standard_normal(500)
        corr = cross_time_correlation(np.column_stack([x, x]))
        assert corr[0, 1] == pytest.approx(1.0, rel=1e-12)

    def test_independent_columns(self):
        gen = np.random.default_rng(79)
        m = gen.standard_normal((2000, 3))
        corr = cross_time_correlation(m)
        off = corr[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off) < 4 / math.sqrt(2000))

    def test_degenerate_column_rejected(self):
        with pytest.raises(ParameterDomainError):
            cross_time_correlation(np.column_stack([np.ones(50), np.arange(50.0)]))


class TestPredictions:
    def test_predicted_exponent_intermediate(self):
        assert predicted_exponent(_config()) == pytest.approx(0.75)

    def test_predicted_limit_variance_intermediate(self):
        var, origin = predicted_limit_variance(_config())
        assert origin == "c2"
        assert var == pytest.approx(0.75 * 2 * math.pi, rel=1e-6)


class TestRunExperiment:
    def test_zero_amplitude_flags_degenerate(self):
        cfg = _config(phi=standard_gaussian(1) * 0.0, n_schedule=(4,),
                      refinement_fraction=0.0)
        report, samples = run_experiment(cfg, workers=1)
        assert report.degenerate_input
        assert all(s.value == 0.0 for s in samples)
        assert report.variances[4][1.0]["variance"] == 0.0
        gates = evaluate_gates(report, cfg)
        assert len(gates) == 1 and not gates[0].passed

    def test_determinism_across_worker_counts(self):
        cfg = _config()
        report1, samples1 = run_experiment(cfg, workers=1)
        report2, samples2 = run_experiment(cfg, workers=2)
        assert [s.value for s in samples1] == [s.value for s in samples2]
        assert report1.unnormalized_variances == report2.unnormalized_variances
        assert report1.scaling["slope"] == report2.scaling["slope"]

    def test_report_structure_and_gates(self):
        cfg = _config()
        report, samples = run_experiment(cfg, workers=1)
        assert len(samples) == 2 * 2 * 100 * 2  # n values x boxes x M x t grid
        assert set(report.mean_zero) == {4, 8}
        for gate in evaluate_gates(report, cfg):
            assert gate.name
            assert isinstance(gate.passed, bool)
        d = report.to_dict()
        assert isinstance(d["variances"]["4"]["0.5"]["variance"], float)
