import numpy as np
import pytest

from src.core.fourier_core import CoeffArray, series_from_log_prices


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def hermitian_coeffs(rng):
    """Factory for random coefficient arrays of a real signal."""
    def make(k_max, scale=1.0, seed=None):
        gen = rng if seed is None else np.random.default_rng(seed)
        positive = scale * (gen.standard_normal(k_max + 1) + 1j * gen.standard_normal(k_max + 1))
        return CoeffArray.from_nonnegative(positive)
    return make


@pytest.fixture
def brownian_series(rng):
    """Factory for a regular-grid Brownian log-price path with annualized variance `variance`."""
    def make(n=23400, variance=1.0, horizon_T=1.0, seed=None):
        gen = rng if seed is None else np.random.default_rng(seed)
        dp = gen.standard_normal(n) * np.sqrt(variance * horizon_T / n)
        log_prices = np.concatenate([[0.0], np.cumsum(dp)])
        return series_from_log_prices(np.arange(n + 1, dtype=float), log_prices, horizon_T)
    return make
