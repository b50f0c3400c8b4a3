import math

import numpy as np
import pytest

from src.core.fourier_core import TWO_PI, CoeffArray, clock_to_horizon, coeffs_dp, coeffs_v
from src.core.simulate import HestonParams, simulate_heston
from src.core.tuning import build_config
from src.core.volvol import (
    EstimatorConfig,
    VolvolEstimate,
    bias_constant_K,
    coeff_sigma4,
    coeff_volvol,
    confidence_interval,
    estimate_series,
    eta,
    feasible_variance_gamma,
    feasible_variance_lambda,
    quarticity,
    real_part,
    volvol_debiased,
    volvol_raw,
    volvol_raw_estimate,
)
from src.utils.errors import (
    ConfigError,
    ImaginaryResidueError,
    InsufficientCoefficientsError,
    VarianceUnavailableError,
)

DAY = 1 / 252
SEEDS = range(100)


def _config(N=40, M=10, L=3, rho_n=1e-4, c_M=0.05, c_N=math.pi):
    return EstimatorConfig(N=N, M=M, L=L, c_N=c_N, c_M=c_M, rho_n=rho_n)


def _only(k_max, entries):
    values = np.zeros(2 * k_max + 1, dtype=complex)
    for k, value in entries.items():
        values[k + k_max] = value
    return CoeffArray(k_max, values)


class TestConstants:
    def test_eta(self):
        assert eta(1) == 0
        assert eta(7) == 0
        assert eta(0.5) == pytest.approx(0.5)
        assert 0 <= eta(2.3) <= 1 / (8 * 2.3 ** 2)

    def test_eta_rejects_nonpositive(self):
        with pytest.raises(ConfigError):
            eta(0)

    def test_bias_constant(self):
        assert bias_constant_K(0.05, math.pi) == pytest.approx(0.0025 / (6 * math.pi))
        assert bias_constant_K(0.05, math.pi) == pytest.approx(1.3263e-4, rel=1e-4)
        assert bias_constant_K(0.0, math.pi) == 0.0
        assert bias_constant_K(0.1, 1.5 * math.pi) > bias_constant_K(0.1, math.pi)


class TestEstimatorConfig:
    def test_frequency_ordering(self):
        with pytest.raises(ConfigError):
            _config(N=10, M=10)
        with pytest.raises(ConfigError):
            _config(M=10, L=10)

    def test_iota_range(self):
        with pytest.raises(ConfigError):
            EstimatorConfig(N=40, M=10, L=3, c_N=1, c_M=1, rho_n=1e-3, iota=0.4)

    def test_from_frequencies(self):
        config = EstimatorConfig.from_frequencies(100, 20, 4, rho_n=0.01)
        assert config.c_N == pytest.approx(1.0)
        assert config.c_M == pytest.approx(2.0)
        assert config.c_M_raw == pytest.approx(20 * 0.01 ** 0.3)
        assert config.k_range == 24


class TestCoefficientEstimators:
    def test_zero_input(self):
        zeros = CoeffArray.zeros(20)
        assert quarticity(zeros, 10) == 0
        assert volvol_raw(zeros, 10) == 0
        assert coeff_sigma4(zeros, 10, 3) == 0
        assert coeff_volvol(zeros, 10, 3, debias=True, K=0.1) == 0

    def test_single_terms(self):
        q, w, M = 0.7, 0.4, 6
        assert quarticity(_only(M, {0: q}), M) == pytest.approx(TWO_PI * q ** 2)
        raw = volvol_raw(_only(M, {1: w, -1: w}), M)
        assert raw == pytest.approx(TWO_PI / (M + 1) * 2 * (1 - 1 / (M + 1)) * w ** 2)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_sigma4_consistency(self, hermitian_coeffs, seed):
        vc, M = hermitian_coeffs(30, seed=seed), 10
        assert coeff_sigma4(vc, M, 0).imag == pytest.approx(0, abs=1e-12)
        assert TWO_PI * coeff_sigma4(vc, M, 0).real == pytest.approx(quarticity(vc, M))
        for k in (1, 5, 20):
            assert coeff_sigma4(vc, M, -k) == pytest.approx(np.conj(coeff_sigma4(vc, M, k)))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_volvol_consistency(self, hermitian_coeffs, seed):
        vc, M = hermitian_coeffs(30, seed=seed), 10
        K = 0.01
        assert coeff_volvol(vc, M, 0, debias=False).real == pytest.approx(volvol_raw(vc, M))
        debiased = coeff_volvol(vc, M, 0, debias=True, K=K).real
        assert debiased == pytest.approx(volvol_raw(vc, M) - K * quarticity(vc, M))

    def test_k0_matches_debiased_estimate(self, hermitian_coeffs):
        config = _config()
        vc = hermitian_coeffs(config.k_range, scale=1e-3)
        estimate = volvol_debiased(vc, config)
        K = bias_constant_K(config.c_M, config.c_N)
        assert coeff_volvol(vc, config.M, 0, debias=True, K=K).real == pytest.approx(
            estimate.averaged_volvol)

    def test_index_overflow(self, hermitian_coeffs):
        vc = hermitian_coeffs(40)
        with pytest.raises(ConfigError):
            coeff_sigma4(vc, 5, 11)
        with pytest.raises(InsufficientCoefficientsError):
            coeff_sigma4(hermitian_coeffs(12), 5, 10)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_raw_and_quarticity_are_nonnegative(self, hermitian_coeffs, seed):
        vc = hermitian_coeffs(15, seed=seed)
        assert volvol_raw(vc, 15) >= 0
        assert quarticity(vc, 15) >= 0

    def test_real_part_rejects_imaginary_residue(self):
        assert real_part([1 + 1j, 2 - 1j], "sum") == 3.0
        with pytest.raises(ImaginaryResidueError):
            real_part([1 + 1e-3j, 2], "sum")


class TestFeasibleVariance:
    def test_zero_input(self):
        config = _config()
        zeros = CoeffArray.zeros(config.k_range)
        assert feasible_variance_lambda(zeros, config) == 0
        assert feasible_variance_gamma(zeros, config) == 0

    def test_constant_volatility_coefficient(self):
        config = _config()
        a = 0.3
        vc = _only(config.k_range, {0: a})
        K = bias_constant_K(config.c_M, config.c_N)
        g0 = -K * TWO_PI * a ** 2
        expected = (4 / (3 * config.c_M)) * g0 ** 2 \
            + (16 / 15 * config.c_M) * g0 * a ** 2 \
            + (16 / 105 * config.c_M ** 3) * a ** 4
        assert feasible_variance_lambda(vc, config) == pytest.approx(expected)
        assert feasible_variance_gamma(vc, config) == 0

    def test_insufficient_coefficients(self, hermitian_coeffs):
        config = _config()
        with pytest.raises(InsufficientCoefficientsError):
            feasible_variance_lambda(hermitian_coeffs(config.M), config)


def _estimate(averaged, variance, debias=True):
    return VolvolEstimate(integrated_volvol=TWO_PI * averaged, averaged_volvol=averaged,
                          asymptotic_variance=variance, std_error=math.nan, ci_low=math.nan,
                          ci_high=math.nan, debias_applied=debias, negative_flag=False)


class TestConfidenceInterval:
    def test_half_width(self):
        low, high = confidence_interval(_estimate(0.0, 1.0), _config(rho_n=1e-4), 0.95)
        assert high == pytest.approx(TWO_PI * 1.959964 * 0.1, rel=1e-6)
        assert low == pytest.approx(-high)

    def test_raw_rate(self):
        config = _config(rho_n=1e-4)
        low, high = confidence_interval(_estimate(0.0, 1.0, debias=False), config, 0.95)
        assert high == pytest.approx(TWO_PI * 1.959964 * 1e-4 ** 0.15, rel=1e-6)

    def test_zero_variance_is_degenerate(self):
        low, high = confidence_interval(_estimate(0.2, 0.0), _config(), 0.9)
        assert low == high == pytest.approx(TWO_PI * 0.2)

    def test_negative_variance_rejected(self):
        with pytest.raises(VarianceUnavailableError):
            confidence_interval(_estimate(0.2, -1.0), _config())

    def test_level_range(self):
        with pytest.raises(ConfigError):
            confidence_interval(_estimate(0.2, 1.0), _config(), 1.0)


class TestEstimateSeries:
    def test_constant_price_gives_zero(self):
        from src.core.fourier_core import rescale_to_2pi
        series = rescale_to_2pi(np.arange(401), np.full(401, 20.0))
        config = build_config(series, M=20)
        estimate = estimate_series(series, config)
        assert estimate.integrated_volvol == 0
        assert not estimate.negative_flag
        assert estimate.ci_low == estimate.ci_high == 0
        assert estimate.variance_available

    @pytest.mark.parametrize("seed", SEEDS)
    def test_scale_equivariance(self, brownian_series, seed):
        series = brownian_series(n=500, variance=0.2, horizon_T=DAY, seed=seed)
        scale = np.random.default_rng(seed + 1000).uniform(0.2, 5.0)
        config = build_config(series, M=20)
        factor = scale ** 4
        raw = estimate_series(series, config, debias=False)
        raw_scaled = estimate_series(series.scaled(scale), config, debias=False)
        assert raw_scaled.averaged_volvol == pytest.approx(factor * raw.averaged_volvol, rel=1e-10)
        base = estimate_series(series, config)
        scaled = estimate_series(series.scaled(scale), config)
        assert scaled.quarticity == pytest.approx(factor * base.quarticity, rel=1e-10)
        # the bias-corrected value is a difference of two terms of the raw size
        assert scaled.averaged_volvol == pytest.approx(factor * base.averaged_volvol, rel=1e-10,
                                                       abs=1e-10 * factor * raw.averaged_volvol)

    def test_raw_exceeds_debiased_by_bias_term(self, brownian_series):
        series = brownian_series(n=4000, variance=0.2, horizon_T=DAY)
        config = build_config(series, c_M=0.05)
        debiased = estimate_series(series, config)
        raw = estimate_series(series, config, debias=False)
        K = bias_constant_K(config.c_M, config.c_N)
        assert raw.averaged_volvol - debiased.averaged_volvol == pytest.approx(K * raw.quarticity)
        assert raw.averaged_volvol >= 0

    def test_constant_volatility_estimate_is_near_zero(self, brownian_series):
        estimates = []
        for seed in range(16):
            series = brownian_series(n=23400, variance=0.2, horizon_T=DAY, seed=seed)
            config = build_config(series, c_M=0.05)
            estimate = estimate_series(series, config)
            estimates.append(clock_to_horizon(estimate.integrated_volvol, DAY))
        assert abs(np.mean(estimates)) < 0.1 * 1.985e-4

    def test_quarticity_tracks_simulated_path(self):
        ratios = []
        for seed in range(4):
            path = simulate_heston(HestonParams(), n_steps=23400, seed=seed)
            series = path.series
            config = build_config(series, c_M=0.05)
            dp = coeffs_dp(series, config.N + config.k_range)
            vc = coeffs_v(dp, config.N, config.k_range)
            q = clock_to_horizon(quarticity(vc, config.M), DAY, "quarticity")
            ratios.append(q / path.true_quarticity)
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.05)

    def test_negative_variance_is_flagged(self, monkeypatch, hermitian_coeffs):
        import src.core.volvol as volvol
        monkeypatch.setattr(volvol, "feasible_variance_lambda", lambda vc, cfg: -1.0)
        config = _config()
        estimate = volvol.volvol_debiased(hermitian_coeffs(config.k_range, 1e-3), config)
        assert not estimate.variance_available
        assert math.isnan(estimate.ci_low) and math.isnan(estimate.std_error)
        assert "negative" in estimate.diagnostic

    def test_raw_estimate_interval(self, hermitian_coeffs):
        config = _config()
        estimate = volvol_raw_estimate(hermitian_coeffs(config.k_range, 1e-2), config)
        assert not estimate.debias_applied
        assert estimate.ci_low <= estimate.integrated_volvol <= estimate.ci_high
