"""Limit-constant tests.

Golden numbers below were computed by independent oracles before the
main implementations were trusted: a raw 3-level nested quadrature of
the intermediate-regime triple integral (no analytic reduction), an
mpmath tanh-sinh evaluation of the large-dimension frequency integral,
and exact Gamma-function evaluations where the integrals collapse.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from degenbranch import (DivergenceError, GaussianTestFunction,
                         ParameterDomainError, Regime, StableIndexVector,
                         UnsupportedRegimeError, anisotropic_cubic_integral,
                         c1, c2, large_dim_covariance, regime_validate,
                         standard_gaussian)

IV_CRIT_1D = StableIndexVector((0.5,))
IV_CRIT_2D = StableIndexVector((1.0, 1.0))
IV_INT = StableIndexVector((2 / 3,))
IV_LARGE = StableIndexVector((0.4,))

# Raw nested quadrature of the triple integral at bar=1.5, theta=1
# (oracles.raw_triple_integral; agrees with Gamma(1/2) to 1.2e-12)
GOLDEN_TRIPLE_BAR15 = 1.7724538509075558
# mpmath tanh-sinh value of the large-dimension covariance at d=1,
# alpha=0.4, gamma=theta=1, standard Gaussian phi (agrees with the exact
# value 2*Gamma(0.3) + Gamma(0.1) to 8.9e-8 relative)
GOLDEN_LARGE_COV = 15.49664429397871


class TestCubicIntegral:
    def test_exact_values(self):
        assert anisotropic_cubic_integral(IV_CRIT_1D) == pytest.approx(2.0, rel=1e-12)
        assert anisotropic_cubic_integral(IV_CRIT_2D) == pytest.approx(2.0, rel=1e-12)
        assert anisotropic_cubic_integral(StableIndexVector((2.0,))) == \
            pytest.approx(3 * math.pi / 8, rel=1e-12)

    def test_closed_form_vs_quadrature_across_regimes(self):
        from degenbranch.limit_constants import _cubic_integral_quadrature
        for alphas in ((2 / 3,), (0.5,), (0.4,), (1.0, 1.0), (0.8, 1.2)):
            iv = StableIndexVector(alphas)
            closed = anisotropic_cubic_integral(iv, cross_check=False)
            quad_value, _ = _cubic_integral_quadrature(iv)
            assert quad_value == pytest.approx(closed, rel=1e-6)

    def test_divergence_guard(self):
        with pytest.raises(DivergenceError):
            anisotropic_cubic_integral(StableIndexVector((0.3,)))  # bar = 3.33


class TestC1:
    def test_closed_form_chain(self):
        res = c1(IV_CRIT_1D, 1.0, 1.0, 0.5)
        assert res.value == pytest.approx(1 / math.sqrt(math.pi), abs=1e-9)
        assert res.regime is Regime.CRITICAL
        res2 = c1(IV_CRIT_2D, 1.0, 1.0, 0.5)
        assert res2.value == pytest.approx(1 / (math.pi * math.sqrt(2)), abs=1e-9)

    def test_rate_homogeneity(self):
        base = c1(IV_CRIT_1D, 1.0, 1.0, 0.5).value
        assert c1(IV_CRIT_1D, 4.0, 1.0, 0.5).value == pytest.approx(2 * base, rel=1e-10)
        assert c1(IV_CRIT_1D, 9.0, 1.0, 0.5).value == pytest.approx(3 * base, rel=1e-10)

    def test_wrong_regime_rejected(self):
        with pytest.raises(UnsupportedRegimeError):
            c1(IV_INT, 1.0, 1.0, 0.5)


class TestC2:
    def test_against_raw_nested_oracle(self):
        res = c2(IV_INT, 1.0, 1.0)
        assert res.details["triple_integral"] == \
            pytest.approx(GOLDEN_TRIPLE_BAR15, rel=1e-4)
        # prefactor: gamma/pi * Gamma(1.5)/(2/3)
        assert res.details["prefactor"] == pytest.approx(0.423142, abs=1e-6)

    def test_against_gamma_closed_form(self):
        # Fubini collapses the triple integral to Gamma(2-bar)*theta^(bar-3)
        for alphas, theta in (((2 / 3,), 1.0), ((2 / 3,), 2.0), ((0.8, 2.0), 1.0)):
            iv = StableIndexVector(alphas)
            res = c2(iv, 1.3, theta)
            want_triple = gamma_fn(2.0 - iv.bar_alpha) * theta ** (iv.bar_alpha - 3.0)
            assert res.details["triple_integral"] == pytest.approx(want_triple, rel=1e-8)

    def test_theta_scaling_law(self):
        bar = IV_INT.bar_alpha
        base = c2(IV_INT, 1.0, 1.0).value
        scaled = c2(IV_INT, 1.0, 2.0).value
        assert scaled / base == pytest.approx(2.0 ** ((bar - 3.0) / 2.0), rel=1e-4)

    def test_rate_homogeneity(self):
        base = c2(IV_INT, 1.0, 1.0).value
        assert c2(IV_INT, 4.0, 1.0).value == pytest.approx(2 * base, rel=1e-10)

    def test_error_estimate_and_radius_reported(self):
        res = c2(IV_INT, 1.0, 1.0)
        assert res.est_abs_error >= 0.0
        assert res.details["truncation_radius"] > 0.0
        assert res.method == "quadrature"

    def test_wrong_regime_rejected(self):
        with pytest.raises(UnsupportedRegimeError):
            c2(IV_CRIT_1D, 1.0, 1.0)


class TestLargeDimCovariance:
    def test_golden_value(self):
        phi = standard_gaussian(1)
        got = large_dim_covariance(phi, phi, IV_LARGE, 1.0, 1.0)
        assert got == pytest.approx(GOLDEN_LARGE_COV, rel=1e-4)

    def test_direct_frequency_oracle(self):
        # independent route: raw quadrature over the frequency variable
        phi1 = standard_gaussian(1)
        phi2 = GaussianTestFunction((0.6,), (1.2,), 0.8)
        gamma_rate, theta = 1.4, 0.9
        alpha = 0.4

        def integrand(z):
            s = abs(z) ** alpha
            cross = (phi1.fourier(np.array([z]))
                     * np.conj(phi2.fourier(np.array([z])))).real
            return (2.0 / s + gamma_rate / s**2) * cross

        tail, _ = quad(integrand, 1e-9, 40.0, epsabs=1e-10, limit=500)
        oracle = 2.0 * tail / (theta * 2 * math.pi)
        got = large_dim_covariance(phi1, phi2, IV_LARGE, gamma_rate, theta)
        assert got == pytest.approx(oracle, rel=1e-5)

    def test_variance_positive_and_symmetric(self):
        phi1 = standard_gaussian(1)
        phi2 = GaussianTestFunction((1.0,), (0.7,))
        assert large_dim_covariance(phi1, phi1, IV_LARGE, 1.0, 1.0) > 0.0
        a = large_dim_covariance(phi1, phi2, IV_LARGE, 1.0, 1.0)
        b = large_dim_covariance(phi2, phi1, IV_LARGE, 1.0, 1.0)
        assert a == pytest.approx(b, abs=1e-10)

    def test_bilinearity(self):
        phi1 = standard_gaussian(1)
        phi2 = GaussianTestFunction((1.0,), (0.7,))
        a = large_dim_covariance(phi1, phi2, IV_LARGE, 1.0, 1.0)
        scaled = large_dim_covariance(3.0 * phi1, phi2, IV_LARGE, 1.0, 1.0)
        assert scaled == pytest.approx(3.0 * a, rel=1e-10)
        combo = large_dim_covariance(phi1 + phi2, phi2, IV_LARGE, 1.0, 1.0)
        bb = large_dim_covariance(phi2, phi2, IV_LARGE, 1.0, 1.0)
        assert combo == pytest.approx(a + bb, rel=1e-8)

    def test_two_dimensional(self):
        # coarse 2-d direct-frequency oracle
        iv = StableIndexVector((0.8, 0.8))
        phi = standard_gaussian(2)
        got = large_dim_covariance(phi, phi, iv, 1.0, 1.0)

        def inner(z1):
            def f(z2):
                s = abs(z1) ** 0.8 + abs(z2) ** 0.8
                cross = (2 * math.pi) ** 2 * math.exp(-z1 * z1 - z2 * z2)
                return (2.0 / s + 1.0 / s**2) * cross
            val, _ = quad(f, -12, 12, epsabs=1e-9, limit=300, points=[0.0])
            return val

        outer, _ = quad(inner, -12, 12, epsabs=1e-7, limit=300, points=[0.0])
        oracle = outer / (2 * math.pi) ** 2
        assert got == pytest.approx(oracle, rel=1e-4)

    def test_divergence_below_threshold(self):
        with pytest.raises(DivergenceError):
            large_dim_covariance(standard_gaussian(1), standard_gaussian(1),
                                 IV_INT, 1.0, 1.0)


class TestRegimeValidate:
    def test_accepts_matching(self):
        assert regime_validate(IV_CRIT_1D, "c1") is Regime.CRITICAL
        assert regime_validate(IV_INT, "c2") is Regime.INTERMEDIATE
        assert regime_validate(StableIndexVector((0.8, 0.8)), "large_dim_cov") \
            is Regime.LARGE

    def test_rejects_with_window_in_message(self):
        with pytest.raises(UnsupportedRegimeError, match="= 2"):
            regime_validate(IV_INT, "c1")
        with pytest.raises(UnsupportedRegimeError, match=r"\(1, 2\)"):
            regime_validate(IV_CRIT_1D, "c2")

    def test_unknown_constant(self):
        with pytest.raises(ParameterDomainError):
            regime_validate(IV_INT, "c7")
