import math

import numpy as np
import pytest
from scipy.integrate import quad

from degenbranch import (MotionLaw, ParameterDomainError, Regime,
                         StableIndexVector, empirical_cf_deviation, motion_cf,
                         sample_stable_increment, semigroup_apply,
                         standard_gaussian)
from degenbranch.exceptions import NumericAccuracyError


class TestStableIndexVector:
    def test_bar_alpha_is_reciprocal_sum(self):
        iv = StableIndexVector((0.5, 1.0, 2.0))
        assert iv.bar_alpha == pytest.approx(2.0 + 1.0 + 0.5, abs=1e-15)
        assert iv.d == 3
        assert iv.alpha_min == 0.5

    @pytest.mark.parametrize("alphas,regime", [
        ((0.4,), Regime.LARGE),            # bar = 2.5
        ((0.5,), Regime.CRITICAL),         # bar = 2
        ((1.0, 1.0), Regime.CRITICAL),
        ((2 / 3,), Regime.INTERMEDIATE),   # bar = 1.5
        ((2.0,), Regime.SUBCRITICAL),      # bar = 0.5
    ])
    def test_regime_classification(self, alphas, regime):
        assert StableIndexVector(alphas).regime is regime

    def test_critical_window_is_tight(self):
        assert StableIndexVector((0.5 + 1e-10,)).regime is not Regime.CRITICAL

    @pytest.mark.parametrize("alphas", [(), (0.0,), (-0.5,), (2.5,), (1.0, 3.0)])
    def test_rejects_bad_indices(self, alphas):
        with pytest.raises(ParameterDomainError):
            StableIndexVector(alphas)


class TestSampler:
    def test_alpha2_is_gaussian_variance_2t(self, rng):
        x = sample_stable_increment(2.0, 1.0, rng, size=200_000)
        # SE of the sample variance of N(0, 2) at this size is ~0.0063
        assert x.var() == pytest.approx(2.0, abs=0.04)
        x = sample_stable_increment(2.0, 3.0, rng, size=200_000)
        assert x.var() == pytest.approx(6.0, abs=0.12)

    def test_alpha1_is_cauchy_quartiles(self, rng):
        x = sample_stable_increment(1.0, 1.0, rng, size=200_000)
        q25, q50, q75 = np.percentile(x, [25, 50, 75])
        assert abs(q50) < 0.02
        assert q25 == pytest.approx(-1.0, abs=0.03)
        assert q75 == pytest.approx(1.0, abs=0.03)

    def test_alpha_half_cf_value(self, rng):
        n = 100_000
        x = sample_stable_increment(0.5, 1.0, rng, size=n)
        ecf = np.cos(x).mean()
        assert abs(ecf - math.exp(-1.0)) <= 5.0 / math.sqrt(n)

    def test_symmetry(self, rng):
        n = 100_000
        for alpha in (0.5, 1.0, 1.3, 2.0):
            x = sample_stable_increment(alpha, 0.7, rng, size=n)
            assert abs(np.sign(x).mean()) <= 5.0 / math.sqrt(n)

    def test_convolution_stability(self, rng):
        n = 100_000
        t1, t2, alpha = 0.4, 1.1, 1.5
        x = (sample_stable_increment(alpha, t1, rng, size=n)
             + sample_stable_increment(alpha, t2, rng, size=n))
        dev = empirical_cf_deviation(x, alpha, t1 + t2, np.linspace(-2, 2, 41))
        assert dev <= 5.0 / math.sqrt(n)

    def test_array_times(self, rng):
        t = np.array([0.5, 1.0, 2.0, 4.0])
        x = sample_stable_increment(1.5, t, rng)
        assert x.shape == t.shape

    @pytest.mark.parametrize("alpha,t", [(0.0, 1.0), (2.1, 1.0), (1.0, 0.0), (1.0, -1.0)])
    def test_domain_errors(self, alpha, t, rng):
        with pytest.raises(ParameterDomainError):
            sample_stable_increment(alpha, t, rng, size=3)


class TestMotionCf:
    def test_at_origin(self):
        iv = StableIndexVector((0.7, 1.9))
        assert motion_cf(np.zeros(2), 5.0, iv) == 1.0
        assert motion_cf(np.array([1.0, 2.0]), 0.0, iv) == 1.0

    def test_spec_values(self):
        assert motion_cf(np.array([4.0]), 1.0, StableIndexVector((0.5,))) == \
            pytest.approx(math.exp(-2.0), rel=1e-12)
        assert motion_cf(np.array([1.0, 2.0]), 0.5, StableIndexVector((1.0, 1.0))) == \
            pytest.approx(math.exp(-1.5), rel=1e-12)

    def test_factorizes_over_coordinates(self):
        iv = StableIndexVector((0.6, 1.4))
        z = np.array([0.8, -1.7])
        t = 0.9
        product = (motion_cf(z[:1], t, StableIndexVector((0.6,)))
                   * motion_cf(z[1:], t, StableIndexVector((1.4,))))
        assert motion_cf(z, t, iv) == pytest.approx(product, rel=1e-14)

    def test_rejects_nonfinite(self):
        with pytest.raises(ParameterDomainError):
            motion_cf(np.array([np.inf]), 1.0, StableIndexVector((1.0,)))

    def test_batch_shape(self):
        iv = StableIndexVector((1.0, 2.0))
        z = np.ones((5, 2))
        assert motion_cf(z, 1.0, iv).shape == (5,)


class TestSemigroup:
    def test_identity_at_time_zero(self):
        phi = standard_gaussian(1)
        iv = StableIndexVector((1.3,))
        for x in (-1.5, 0.0, 2.0):
            assert semigroup_apply(phi, 0.0, (x,), iv) == \
                pytest.approx(phi.value(np.array([x])), rel=1e-14)

    def test_gaussian_closed_form(self):
        phi = standard_gaussian(1)
        iv = StableIndexVector((2.0,))
        for t in (0.25, 1.0, 5.0):
            for x in (0.0, 0.8):
                want = (1 + 2 * t) ** -0.5 * math.exp(-x * x / (2 * (1 + 2 * t)))
                assert semigroup_apply(phi, t, (x,), iv) == pytest.approx(want, rel=1e-12)

    def test_cauchy_convolution_oracle(self):
        # independent route: direct convolution with the Cauchy density
        phi = standard_gaussian(1)
        iv = StableIndexVector((1.0,))
        got = semigroup_apply(phi, 1.0, (0.0,), iv)
        oracle, _ = quad(lambda y: math.exp(-y * y / 2) / (math.pi * (1 + y * y)),
                         -80, 80, epsabs=1e-13, limit=400)
        assert got == pytest.approx(oracle, abs=1e-8)

    def test_semigroup_symmetry(self):
        # <phi1, T_t phi2> = <phi2, T_t phi1>
        from degenbranch import GaussianTestFunction
        phi1 = GaussianTestFunction((0.0,), (1.0,))
        phi2 = GaussianTestFunction((1.2,), (0.7,))
        for alpha, t in ((0.8, 0.5), (1.5, 1.0), (2.0, 2.0)):
            iv = StableIndexVector((alpha,))
            lhs, _ = quad(lambda x: phi1.value(np.array([x]))
                          * semigroup_apply(phi2, t, (x,), iv), -14, 14,
                          epsabs=1e-11, limit=300)
            rhs, _ = quad(lambda x: phi2.value(np.array([x]))
                          * semigroup_apply(phi1, t, (x,), iv), -14, 14,
                          epsabs=1e-11, limit=300)
            assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_product_over_coordinates(self):
        from degenbranch import GaussianTestFunction
        phi = GaussianTestFunction((0.0, 0.5), (1.0, 2.0), 1.5)
        iv = StableIndexVector((1.0, 2.0))
        got = semigroup_apply(phi, 0.7, (0.3, -0.2), iv)
        f1 = semigroup_apply(GaussianTestFunction((0.0,), (1.0,)), 0.7, (0.3,),
                             StableIndexVector((1.0,)))
        f2 = semigroup_apply(GaussianTestFunction((0.5,), (2.0,)), 0.7, (-0.2,),
                             StableIndexVector((2.0,)))
        assert got == pytest.approx(1.5 * f1 * f2, rel=1e-10)

    def test_accuracy_error_carries_bound(self):
        phi = standard_gaussian(1)
        iv = StableIndexVector((1.0,))
        with pytest.raises(NumericAccuracyError) as err:
            semigroup_apply(phi, 1.0, (0.0,), iv, abs_tol=1e-300)
        assert err.value.achieved_error is not None


class TestEmpiricalCfDeviation:
    def test_zero_samples_at_time_zero(self):
        assert empirical_cf_deviation(np.zeros(10), 1.0, 0.0, [0.0]) == 0.0

    def test_detects_mislabeled_law(self, rng):
        x = sample_stable_increment(2.0, 1.0, rng, size=100_000)
        dev = empirical_cf_deviation(x, 1.0, 1.0, np.linspace(-3, 3, 61))
        assert dev > 0.05

    def test_empty_samples_rejected(self):
        with pytest.raises(ParameterDomainError):
            empirical_cf_deviation(np.array([]), 1.0, 1.0, [0.5])


class TestMotionLaw:
    def test_cf_bounds(self):
        law = MotionLaw(StableIndexVector((0.5, 1.5)))
        z = np.array([0.5, -2.0])
        value = law.cf(z, 2.0)
        assert 0.0 < value <= 1.0

    def test_vector_increments(self, rng):
        law = MotionLaw(StableIndexVector((1.0, 2.0)))
        x = law.sample_increment(1.0, rng, size=1000)
        assert x.shape == (1000, 2)
