"""
Realized vol-of-vol estimators built on pre-estimated spot variance.

Both estimators need a regular grid; irregular tick data should go through
data_importer.previous_tick first. Units follow the horizon clock: ρ is the
mesh in year fractions, so the output is comparable with the simulated
ground truth.

Index translation. With increments d[j] = p(t_{j+1}) - p(t_j), j = 0..n-1,
the local estimate anchored at 1-based t_i uses the increments ending at
t_i .. t_{i+κ-1}, i.e. d[i-1 .. i+κ-2]. Here that window is stored at
0-based position a = i - 1, so spot_var[a] = Σ d[a:a+κ]² / (κρ) for
a = 0..n-κ, and the outer sum over i = 1..n-2κ+1 runs over a = 0..n-2κ.
"""

import math
from dataclasses import dataclass

import numpy as np

from src.utils.config import get_logger
from src.utils.errors import ConfigError, InvalidSeriesError, SampleSizeError

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class SpotGridEstimates:
    """Local variance and quarticity estimates on the anchors a = 0..n-κ."""

    kappa: int
    spot_var: np.ndarray
    spot_quart: np.ndarray

    def __len__(self):
        return self.spot_var.size


def _require_regular(series):
    if not series.is_regular():
        raise InvalidSeriesError("realized estimators need a regular grid; resample first")


def _spot(series, kappa):
    d = series.increments
    rho = series.mesh_horizon
    window = np.ones(kappa)
    sq = np.convolve(d ** 2, window, mode="valid")
    quad = np.convolve(d ** 4, window, mode="valid")
    return SpotGridEstimates(kappa, sq / (kappa * rho), quad / (3.0 * kappa * rho ** 2))


def spot_variance(series, kappa):
    """
    Local spot variance and quarticity estimates with window κ.

    Args:
        series (PriceSeries): Regularly sampled observations
        kappa (int): Window length, 1 <= κ <= n/4

    Returns:
        SpotGridEstimates: n - κ + 1 anchors
    """
    _require_regular(series)
    n = series.n_intervals
    if not 1 <= kappa <= n / 4:
        raise ConfigError(f"kappa must lie in [1, n/4] = [1, {n / 4:g}], got {kappa}")
    return _spot(series, int(kappa))


def kappa_for(series, beta):
    """Window κ = max(2, ⌈β ρ^(-1/2)⌉) with ρ the horizon-unit mesh."""
    if not beta > 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    return max(2, math.ceil(beta / math.sqrt(series.mesh_horizon)))


def _realized_volvol(series, beta, use_quarticity):
    _require_regular(series)
    kappa = kappa_for(series, beta)
    n = series.n_intervals
    if n <= 2 * kappa:
        raise SampleSizeError(f"need n > 2κ, got n={n}, κ={kappa}")
    spot = _spot(series, kappa)
    anchors = n - 2 * kappa + 1
    current = spot.spot_var[:anchors]
    ahead = spot.spot_var[kappa:kappa + anchors]
    correction = spot.spot_quart[:anchors] if use_quarticity else current ** 2
    logger.debug("Realized vol-of-vol with kappa=%d over %d anchors", kappa, anchors)
    return 3.0 / (2.0 * kappa) * float(np.sum((ahead - current) ** 2 - (4.0 / kappa) * correction))


def asj_estimator(series, beta):
    """Spot-variance difference estimator, debiased with squared spot variance."""
    return _realized_volvol(series, beta, use_quarticity=False)


def vetter_estimator(series, beta):
    """Same sum debiased with the local quarticity estimate."""
    return _realized_volvol(series, beta, use_quarticity=True)


def asj_asymptotic_variance(beta, int_gamma4, int_sigma8, int_sigma4_gamma2):
    """
    Asymptotic variance of the realized estimator in terms of integrated quantities.

    (151/70) β ∫γ⁴ + (48/β³) ∫σ⁸ + (12/β) ∫σ⁴γ²
    """
    if not beta > 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    return 151.0 / 70.0 * beta * int_gamma4 + 48.0 / beta ** 3 * int_sigma8 \
        + 12.0 / beta * int_sigma4_gamma2
