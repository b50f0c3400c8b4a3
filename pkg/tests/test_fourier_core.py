import math

import numpy as np
import pytest
from scipy import fft as sp_fft
from scipy.integrate import trapezoid

from src.core.fourier_core import (
    TWO_PI,
    CoeffArray,
    PriceSeries,
    clock_to_horizon,
    coeffs_dp,
    coeffs_dp_direct,
    coeffs_v,
    coeffs_v_direct,
    dirichlet,
    fejer,
    fejer_energy_closed_form,
    fejer_energy_parseval,
    fejer_tail_mass,
    integrated_variance,
    kernel_identity_suite,
    rescale_to_2pi,
    series_from_log_prices,
)
from src.utils.errors import ConfigError, InsufficientCoefficientsError, InvalidSeriesError


def _random_walk(rng, n):
    return np.concatenate([[0.0], np.cumsum(rng.standard_normal(n) * 0.01)])


class TestRescale:
    def test_uniform_map_of_constant_prices(self):
        series = rescale_to_2pi([0, 30, 60], [100, 100, 100])
        np.testing.assert_allclose(series.times, [0.0, math.pi, TWO_PI])
        np.testing.assert_allclose(series.log_prices, [math.log(100)] * 3)

    def test_one_second_day_mesh(self):
        series = rescale_to_2pi(np.arange(23401), np.full(23401, 50.0))
        assert series.n_intervals == 23400
        assert series.mesh == pytest.approx(TWO_PI / 23400, rel=1e-9)
        assert series.is_regular()

    def test_mesh_is_largest_gap(self):
        series = rescale_to_2pi([0, 10, 20, 60], [1, 2, 3, 4])
        assert series.mesh == pytest.approx(40 / 60 * TWO_PI)
        assert series.mean_mesh == pytest.approx(TWO_PI / 3)
        assert not series.is_regular()

    def test_non_monotone_times_report_first_violation(self):
        with pytest.raises(InvalidSeriesError) as err:
            rescale_to_2pi([0, 2, 1, 3], [1, 1, 1, 1])
        assert err.value.index == 2

    def test_non_positive_price_rejected(self):
        with pytest.raises(InvalidSeriesError) as err:
            rescale_to_2pi([0, 1, 2], [1.0, 0.0, 2.0])
        assert err.value.index == 1

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidSeriesError):
            PriceSeries(np.array([0.0, TWO_PI]), np.array([0.0, 1.0, 2.0]))

    def test_arrays_are_read_only(self):
        series = rescale_to_2pi([0, 1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            series.log_prices[0] = 5.0

    def test_horizon_units(self):
        series = rescale_to_2pi(np.arange(79), np.ones(79), horizon_T=1 / 252)
        assert series.mesh_horizon == pytest.approx(1 / 252 / 78)


class TestCoefficients:
    def test_constant_path_has_zero_coefficients(self):
        series = rescale_to_2pi(np.arange(101), np.full(101, 7.0))
        dp = coeffs_dp(series, 20)
        assert np.all(dp.values == 0)

    def test_single_increment(self):
        series = PriceSeries(np.array([0.0, TWO_PI]), np.array([0.0, 0.3]))
        for method in ("fft", "direct"):
            dp = coeffs_dp(series, 5, method=method)
            np.testing.assert_allclose(dp.values, np.full(11, 0.3 / TWO_PI), rtol=1e-14)

    def test_fft_matches_direct_sum(self, rng):
        series = series_from_log_prices(np.arange(1001), _random_walk(rng, 1000))
        fast = coeffs_dp(series, 50, method="fft")
        oracle = coeffs_dp_direct(series, 50)
        scale = np.max(np.abs(oracle.values))
        np.testing.assert_allclose(fast.values, oracle.values, rtol=0, atol=1e-12 * scale)

    def test_fft_handles_frequencies_beyond_sample_size(self, rng):
        series = series_from_log_prices(np.arange(41), _random_walk(rng, 40))
        fast = coeffs_dp(series, 70, method="fft")
        oracle = coeffs_dp_direct(series, 70)
        np.testing.assert_allclose(fast.values, oracle.values, rtol=0, atol=1e-13)

    def test_irregular_grid_uses_direct_sum(self, rng):
        times = np.sort(rng.uniform(0, 100, 300))
        series = series_from_log_prices(times, _random_walk(rng, 299))
        with pytest.raises(ConfigError):
            coeffs_dp(series, 10, method="fft")
        auto = coeffs_dp(series, 80)
        oracle = coeffs_dp_direct(series, 80)
        np.testing.assert_allclose(auto.values, oracle.values, rtol=0, atol=1e-13)

    @pytest.mark.parametrize("seed", range(100))
    def test_hermitian_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        times = np.sort(rng.uniform(0, 10, 500))
        series = series_from_log_prices(times, _random_walk(rng, 499))
        dp = coeffs_dp(series, 40)
        assert dp.is_hermitian(tol=1e-14)
        # the literal sums evaluate negative frequencies independently
        assert coeffs_dp_direct(series, 40).is_hermitian(tol=1e-12)
        assert coeffs_v(dp, 20, 20).is_hermitian(tol=1e-14)

    def test_level_shift_leaves_coefficients_unchanged(self, rng):
        series = series_from_log_prices(np.arange(257), _random_walk(rng, 256))
        base = coeffs_dp(series, 30)
        moved = coeffs_dp(series.shifted(4.0), 30)
        np.testing.assert_allclose(moved.values, base.values, rtol=0, atol=1e-12)

    def test_indexing_by_frequency(self, hermitian_coeffs):
        coeffs = hermitian_coeffs(4)
        assert coeffs[-2] == np.conj(coeffs[2])
        np.testing.assert_array_equal(coeffs[np.array([0, 1])], coeffs.values[4:6])
        with pytest.raises(InsufficientCoefficientsError) as err:
            coeffs[5]
        assert err.value.required == 5


class TestVolatilityCoefficients:
    def test_zero_input(self):
        vc = coeffs_v(CoeffArray.zeros(12), 8, 4)
        assert np.all(vc.values == 0)

    def test_constant_dp(self):
        dp = CoeffArray(10, np.full(21, 0.3))
        vc = coeffs_v(dp, 6, 4)
        assert vc[0] == pytest.approx(TWO_PI * 0.09, rel=1e-14)

    def test_insufficient_dp_names_required_minimum(self):
        with pytest.raises(InsufficientCoefficientsError) as err:
            coeffs_v(CoeffArray.zeros(10), 8, 4)
        assert err.value.required == 12

    def test_matches_literal_double_sum(self, hermitian_coeffs):
        dp = hermitian_coeffs(30)
        fast = coeffs_v(dp, 20, 10)
        oracle = coeffs_v_direct(dp, 20, 10)
        scale = np.max(np.abs(oracle.values))
        np.testing.assert_allclose(fast.values, oracle.values, rtol=0, atol=1e-12 * scale)

    def test_zero_frequency_is_real_and_nonnegative(self, hermitian_coeffs):
        vc = coeffs_v(hermitian_coeffs(25), 15, 5)
        assert vc[0].imag == 0
        assert vc[0].real >= -1e-14

    def test_integrated_variance_matches_realized_variance(self, brownian_series):
        series = brownian_series(n=23400)
        n = series.n_intervals
        N = n // 2
        dp = coeffs_dp(series, N)
        estimate = integrated_variance(coeffs_v(dp, N, 0))

        increments = series.increments
        realized = float(np.sum(increments ** 2))
        nyquist = float(np.abs(sp_fft.fft(increments)[n // 2]) ** 2)
        # with N = n/2 the two Nyquist terms alias onto the same DFT bin
        assert estimate == pytest.approx((n * realized + nyquist) / (n + 1), rel=1e-10)
        assert estimate == pytest.approx(realized, rel=5e-3)


def test_clock_conversion_powers():
    T = 1 / 252
    assert clock_to_horizon(2.0, T, "variance") == 2.0
    assert clock_to_horizon(1.0, T, "volvol") == pytest.approx((TWO_PI / T) ** 2)
    assert clock_to_horizon(3.0, T, "quarticity") == pytest.approx(3.0 * TWO_PI / T)


class TestKernels:
    def test_dirichlet_values(self):
        assert dirichlet(1, math.pi) == pytest.approx(-1 / 3)
        for N in (0, 1, 5, 40):
            assert dirichlet(N, 0.0) == 1.0
            assert dirichlet(N, TWO_PI) == 1.0

    def test_dirichlet_bound(self):
        x = np.linspace(-3 * math.pi, 3 * math.pi, 5001)
        for N in (1, 7, 33):
            assert np.max(np.abs(dirichlet(N, x))) <= 1.0 + 1e-12

    def test_fejer_peak_and_sign(self):
        x = np.linspace(-math.pi, math.pi, 2001)
        for M in (1, 4, 50):
            assert fejer(M, 0.0) == M + 1
            assert np.min(fejer(M, x)) >= -1e-12

    def test_fejer_matches_weighted_exponential_sum(self):
        M, x = 6, np.linspace(-3, 3, 41)
        k = np.arange(-M, M + 1)
        weights = 1 - np.abs(k) / (M + 1)
        for order in (0, 1, 2):
            direct = ((1j * k) ** order * weights * np.exp(1j * np.outer(x, k))).sum(axis=1)
            np.testing.assert_allclose(fejer(M, x, order), direct.real, atol=1e-10)

    def test_unit_mass(self):
        x = np.linspace(-math.pi, math.pi, 8193)
        for M in (1, 16, 128):
            assert trapezoid(fejer(M, x), x) / TWO_PI == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("order", [1, 2])
    def test_energy_closed_form_matches_parseval(self, order):
        for M in (1, 2, 9, 64):
            assert fejer_energy_parseval(M, order) == pytest.approx(
                fejer_energy_closed_form(M, order), rel=1e-12)

    def test_energy_limits(self):
        assert fejer_energy_closed_form(10 ** 6, 1) == pytest.approx(TWO_PI / 15, rel=1e-5)
        assert fejer_energy_closed_form(10 ** 6, 2) == pytest.approx(4 * math.pi / 105, rel=1e-5)

    def test_tail_mass_decreases(self):
        tails = [fejer_tail_mass(M) for M in (8, 16, 32, 64)]
        assert all(b < a for a, b in zip(tails, tails[1:]))

    def test_invalid_orders(self):
        with pytest.raises(ConfigError):
            fejer(3, 0.1, derivative_order=3)
        with pytest.raises(ConfigError):
            fejer(0, 0.1)


class TestKernelSuite:
    def test_default_run_passes(self):
        report = kernel_identity_suite()
        assert list(report.columns) == ["identity", "size", "computed", "target", "tolerance", "passed"]
        assert report["passed"].all()
        assert 1 in set(report["size"])
        assert any(report["identity"].str.startswith("fejer_tail_decay"))

    def test_tiny_tolerance_exposes_rounding(self):
        report = kernel_identity_suite(sizes=(8, 16, 32, 64, 128), tol=1e-16)
        assert not report["passed"].all()
