"""
Fourier coefficients of log-price increments and of the volatility process.

Everything here runs on the estimation clock: the observation window is
mapped affinely onto [0, 2π]. Coefficient arrays are indexed by the integer
frequency k in [-k_max, k_max]. The Dirichlet and Fejér kernels and their
closed-form identities are used as test oracles and by the kernel self-check.

No detrending or boundary periodization is applied to the price path: the
drift and the p(0) != p(2π) mismatch only move c_0(dv), which no estimator
in this package uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import fft as sp_fft
from scipy.integrate import trapezoid

from src.utils.config import DEFAULT_HORIZON, get_logger
from src.utils.errors import ConfigError, InsufficientCoefficientsError, InvalidSeriesError

logger = get_logger(__name__)

TWO_PI = 2.0 * np.pi
REGULAR_RTOL = 1e-9
_SINGULAR = 1e-9
_DIRECT_BLOCK = 64

# Scaling of integrated quantities between the [0, 2π] clock and the horizon
# clock: clock value = (T / 2π) ** power * horizon value.
CLOCK_POWERS = {"variance": 0, "quarticity": 1, "volvol": 2}


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Log-price observations on the estimation clock [0, 2π]."""

    times: np.ndarray
    log_prices: np.ndarray
    horizon_T: float = DEFAULT_HORIZON

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        log_prices = np.array(self.log_prices, dtype=float)
        if times.ndim != 1 or log_prices.ndim != 1:
            raise InvalidSeriesError("times and log_prices must be one-dimensional")
        if times.size != log_prices.size:
            raise InvalidSeriesError(
                f"length mismatch: {times.size} times vs {log_prices.size} log-prices")
        if times.size < 2:
            raise InvalidSeriesError("a price series needs at least 2 observations")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(log_prices))):
            raise InvalidSeriesError("times and log-prices must be finite")
        _check_increasing(times)
        if times[0] < -1e-12 or times[-1] > TWO_PI * (1 + 1e-12):
            raise InvalidSeriesError(
                f"times must lie in [0, 2π], got [{times[0]}, {times[-1]}]")
        if not self.horizon_T > 0:
            raise InvalidSeriesError(f"horizon_T must be positive, got {self.horizon_T}")
        times.flags.writeable = False
        log_prices.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "log_prices", log_prices)
        object.__setattr__(self, "horizon_T", float(self.horizon_T))

    @property
    def n_intervals(self):
        """Number of increments n (the grid is t_0, ..., t_n)."""
        return self.times.size - 1

    @property
    def increments(self):
        return np.diff(self.log_prices)

    @property
    def mesh(self):
        """ρ(n): largest gap between consecutive times, in radians."""
        return float(np.max(np.diff(self.times)))

    @property
    def mean_mesh(self):
        """Average gap (t_n - t_0)/n in radians; equals the mesh on a regular grid."""
        return float(self.times[-1] - self.times[0]) / self.n_intervals

    @property
    def mesh_horizon(self):
        """ρ(n) expressed in horizon units (year fractions)."""
        return self.mesh * self.horizon_T / TWO_PI

    def is_regular(self, rtol=REGULAR_RTOL):
        gaps = np.diff(self.times)
        return bool(np.max(gaps) - np.min(gaps) <= rtol * np.mean(gaps))

    def shifted(self, offset):
        """Same observation times, log-prices shifted by a constant."""
        return PriceSeries(self.times, self.log_prices + offset, self.horizon_T)

    def scaled(self, factor):
        """Same times, log-prices scaled about the first observation."""
        start = self.log_prices[0]
        return PriceSeries(self.times, start + factor * (self.log_prices - start), self.horizon_T)


@dataclass(frozen=True, eq=False)
class CoeffArray:
    """Complex Fourier coefficients indexed k = -k_max..k_max."""

    k_max: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        k_max = int(self.k_max)
        if k_max < 0:
            raise ConfigError(f"k_max must be nonnegative, got {k_max}")
        if values.shape != (2 * k_max + 1,):
            raise ConfigError(
                f"expected {2 * k_max + 1} coefficients for k_max={k_max}, got {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "k_max", k_max)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_nonnegative(cls, positive):
        """Build the full array of a real signal from its k >= 0 coefficients."""
        positive = np.array(positive, dtype=complex)
        positive[0] = positive[0].real
        full = np.concatenate([np.conj(positive[:0:-1]), positive])
        return cls(positive.size - 1, full)

    @classmethod
    def zeros(cls, k_max):
        return cls(k_max, np.zeros(2 * k_max + 1, dtype=complex))

    @property
    def frequencies(self):
        return np.arange(-self.k_max, self.k_max + 1)

    def require(self, k_needed, what="operation"):
        if self.k_max < k_needed:
            raise InsufficientCoefficientsError(
                f"{what} needs coefficients up to |k| = {k_needed}, array has k_max = {self.k_max}",
                required=k_needed,
            )

    def __getitem__(self, k):
        k = np.asarray(k)
        if np.any(np.abs(k) > self.k_max):
            self.require(int(np.max(np.abs(k))), "index")
        out = self.values[k + self.k_max]
        return out.item() if out.ndim == 0 else out

    def is_hermitian(self, tol=1e-14):
        scale = max(float(np.max(np.abs(self.values))), np.finfo(float).tiny)
        return bool(np.max(np.abs(self.values - np.conj(self.values[::-1]))) <= tol * scale)


def _check_increasing(times):
    bad = np.flatnonzero(~(np.diff(times) > 0))
    if bad.size:
        index = int(bad[0]) + 1
        raise InvalidSeriesError(
            f"times must be strictly increasing; first violation at index {index}", index=index)


def _rescale_times(raw_times):
    raw_times = np.asarray(raw_times, dtype=float)
    if raw_times.ndim != 1 or raw_times.size < 2:
        raise InvalidSeriesError("at least 2 observation times are required")
    _check_increasing(raw_times)
    span = raw_times[-1] - raw_times[0]
    return (raw_times - raw_times[0]) / span * TWO_PI


def rescale_to_2pi(raw_times, raw_prices, horizon_T=DEFAULT_HORIZON):
    """
    Map raw observation times affinely onto [0, 2π] and take log-prices.

    Args:
        raw_times (array-like): Strictly increasing times (e.g. seconds from open)
        raw_prices (array-like): Strictly positive price levels
        horizon_T (float): Window length in year fractions (default one trading day)

    Returns:
        PriceSeries: The rescaled series
    """
    raw_prices = np.asarray(raw_prices, dtype=float)
    nonpositive = np.flatnonzero(~(raw_prices > 0))
    if nonpositive.size:
        index = int(nonpositive[0])
        raise InvalidSeriesError(
            f"prices must be strictly positive; index {index} has {raw_prices[index]}", index=index)
    return PriceSeries(_rescale_times(raw_times), np.log(raw_prices), horizon_T)


def series_from_log_prices(raw_times, log_prices, horizon_T=DEFAULT_HORIZON):
    """Like rescale_to_2pi for data that is already in log-prices (simulations)."""
    return PriceSeries(_rescale_times(raw_times), np.asarray(log_prices, dtype=float), horizon_T)


def _fft_compatible(series):
    span = series.times[-1] - series.times[0]
    return series.is_regular() and abs(span - TWO_PI) <= 1e-12 * TWO_PI


def _dp_fft(times, dp, k_max):
    # On t_i = t_0 + 2πi/m the sum is a length-m DFT; frequencies alias exactly mod m.
    m = dp.size
    spectrum = sp_fft.fft(dp)
    k = np.arange(k_max + 1)
    phase = np.exp(-1j * k * times[0]) if times[0] != 0 else 1.0
    return spectrum[k % m] * phase / TWO_PI


def _dp_direct(times, dp, k_max):
    out = np.empty(k_max + 1, dtype=complex)
    for start in range(0, k_max + 1, _DIRECT_BLOCK):
        k = np.arange(start, min(start + _DIRECT_BLOCK, k_max + 1))
        out[k] = np.exp(-1j * np.outer(k, times)) @ dp
    return out / TWO_PI


def coeffs_dp(series, k_max, method="auto"):
    """
    Fourier coefficients c_k(dp) of the log-price increments for |k| <= k_max.

    Regular grids spanning [0, 2π] go through an FFT of the increments;
    anything else uses the direct nonuniform sum.
    """
    k_max = int(k_max)
    if k_max < 0:
        raise ConfigError(f"k_max must be nonnegative, got {k_max}")
    if method == "auto":
        method = "fft" if _fft_compatible(series) else "direct"
    if method == "fft":
        if not _fft_compatible(series):
            raise ConfigError("FFT coefficients need a regular grid spanning [0, 2π]")
        positive = _dp_fft(series.times, series.increments, k_max)
    elif method == "direct":
        positive = _dp_direct(series.times[:-1], series.increments, k_max)
    else:
        raise ConfigError(f"unknown coefficient method: {method}")
    return CoeffArray.from_nonnegative(positive)


def coeffs_dp_direct(series, k_max):
    """Literal evaluation of c_k(dp) for every k in [-k_max, k_max]; oracle only."""
    k = np.arange(-k_max, k_max + 1)
    t = series.times[:-1]
    dp = series.increments
    values = np.array([np.sum(np.exp(-1j * kk * t) * dp) for kk in k]) / TWO_PI
    return CoeffArray(k_max, values)


def coeffs_v(dp, N, k_range):
    """
    Convolution estimate of the volatility coefficients c_k(v) for |k| <= k_range.

    value(k) = 2π/(2N+1) * sum_{|s|<=N} c_s(dp) c_{k-s}(dp); needs dp up to N + k_range.
    """
    N, k_range = int(N), int(k_range)
    if N < 0 or k_range < 0:
        raise ConfigError(f"N and k_range must be nonnegative, got N={N}, k_range={k_range}")
    dp.require(N + k_range, f"convolution with N={N}, k_range={k_range}")
    s = np.arange(-N, N + 1)
    left = dp.values[s + dp.k_max]
    positive = np.empty(k_range + 1, dtype=complex)
    for k in range(k_range + 1):
        positive[k] = np.dot(left, dp.values[k - s + dp.k_max])
    positive *= TWO_PI / (2 * N + 1)
    return CoeffArray.from_nonnegative(positive)


def coeffs_v_direct(dp, N, k_range):
    """Literal double sum for every k in [-k_range, k_range]; oracle only."""
    dp.require(N + k_range, "direct convolution")
    values = []
    for k in range(-k_range, k_range + 1):
        total = 0j
        for s in range(-N, N + 1):
            total += dp[s] * dp[k - s]
        values.append(total * TWO_PI / (2 * N + 1))
    return CoeffArray(k_range, np.array(values))


def integrated_variance(vcoeffs):
    """2π c_0(v): Fourier estimate of the integrated variance over the window."""
    return TWO_PI * float(vcoeffs[0].real)


def clock_to_horizon(value, horizon_T, kind="volvol"):
    """Convert an integrated quantity from the [0, 2π] clock to horizon units."""
    return value * (TWO_PI / horizon_T) ** CLOCK_POWERS[kind]


# Kernels

def _as_output(values):
    return values.item() if values.ndim == 0 else values


def dirichlet(N, x):
    """Rescaled Dirichlet kernel sin((2N+1)x/2) / ((2N+1) sin(x/2)), equal to 1 at x ≡ 0."""
    if N < 0:
        raise ConfigError(f"N must be nonnegative, got {N}")
    x = np.asarray(x, dtype=float)
    half = np.sin(x / 2)
    singular = np.abs(half) < _SINGULAR
    safe = np.where(singular, 1.0, half)
    values = np.where(singular, 1.0, np.sin((2 * N + 1) * x / 2) / ((2 * N + 1) * safe))
    return _as_output(values)


def fejer(M, x, derivative_order=0):
    """
    Fejér kernel F_M(x) = sum_{|k|<=M} (1 - |k|/(M+1)) e^{ikx} or its first two derivatives.
    """
    if M < 1:
        raise ConfigError(f"M must be at least 1, got {M}")
    x = np.asarray(x, dtype=float)
    if derivative_order == 0:
        half = np.sin(x / 2)
        singular = np.abs(half) < _SINGULAR
        safe = np.where(singular, 1.0, half)
        ratio = np.sin((M + 1) * x / 2) / safe
        values = np.where(singular, M + 1.0, ratio ** 2 / (M + 1))
        return _as_output(values)

    k = np.arange(1, M + 1, dtype=float)
    weights = 1.0 - k / (M + 1)
    phases = np.multiply.outer(x, k)
    if derivative_order == 1:
        values = -2.0 * (np.sin(phases) @ (weights * k))
    elif derivative_order == 2:
        values = -2.0 * (np.cos(phases) @ (weights * k ** 2))
    else:
        raise ConfigError(f"derivative_order must be 0, 1 or 2, got {derivative_order}")
    return _as_output(np.asarray(values))


def fejer_energy_closed_form(M, derivative_order):
    """
    Exact value of ∫_{-π}^{π} M^{-(2d+1)} |F_M^{(d)}(x)|^2 dx for d = 1, 2.

    Tends to 2π/15 (d=1) and 4π/105 (d=2) as M grows.
    """
    if derivative_order == 1:
        return TWO_PI * (M ** 3 + 4 * M ** 2 + 6 * M + 4) / (15 * M ** 2 * (M + 1))
    if derivative_order == 2:
        numerator = 2 * M ** 5 + 12 * M ** 4 + 30 * M ** 3 + 40 * M ** 2 + 23 * M - 2
        return TWO_PI * numerator / (105 * M ** 4 * (M + 1))
    raise ConfigError(f"closed form only for derivative orders 1 and 2, got {derivative_order}")


def fejer_energy_parseval(M, derivative_order):
    """Same energy via Parseval: 2π sum (1-|k|/(M+1))^2 k^{2d}, normalized by M^{2d+1}."""
    k = np.arange(-M, M + 1, dtype=float)
    weights = (1.0 - np.abs(k) / (M + 1)) ** 2 * k ** (2 * derivative_order)
    return TWO_PI * math.fsum(weights) / M ** (2 * derivative_order + 1)


def _periodic_grid(size):
    points = max(4096, 16 * size)
    return np.linspace(-np.pi, np.pi, points + 1)


def fejer_tail_mass(M, delta=0.5, points=20001):
    """(1/2π) ∫_{δ<=|x|<=π} F_M(x) dx; tends to zero as M grows."""
    x = np.linspace(delta, np.pi, points)
    return 2.0 * trapezoid(fejer(M, x), x) / TWO_PI


def kernel_identity_suite(sizes=(1, 8, 16, 32, 64, 128), tol=1e-6, mass_tol=None, delta=0.5):
    """
    Run the kernel identities for each size and report them as a table.

    Args:
        sizes (iterable of int): Values used both as M (Fejér) and N (Dirichlet)
        tol (float): Tolerance of the energy identities
        mass_tol (float, optional): Tolerance of the unit-mass identity (default min(1e-8, tol))
        delta (float): Inner radius of the tail region for the good-kernel check

    Returns:
        pandas.DataFrame: identity, size, computed, target, tolerance, passed
    """
    if mass_tol is None:
        mass_tol = min(1e-8, tol)
    rows = []

    def record(identity, size, computed, target, tolerance, passed=None):
        if passed is None:
            passed = abs(computed - target) <= tolerance * max(1.0, abs(target))
        rows.append({"identity": identity, "size": size, "computed": computed,
                     "target": target, "tolerance": tolerance, "passed": bool(passed)})

    for size in sizes:
        x = _periodic_grid(size)
        f0 = fejer(size, x)
        record("fejer_unit_mass", size, trapezoid(f0, x) / TWO_PI, 1.0, mass_tol)
        record("fejer_peak", size, fejer(size, 0.0), size + 1.0, tol)
        record("fejer_nonnegative", size, float(np.min(f0)), 0.0, tol,
               passed=np.min(f0) >= -tol)
        for order in (1, 2):
            closed = fejer_energy_closed_form(size, order)
            derivative = fejer(size, x, order)
            quadrature = trapezoid(derivative ** 2, x) / size ** (2 * order + 1)
            record(f"fejer_d{order}_energy_quadrature", size, quadrature, closed, tol)
            record(f"fejer_d{order}_energy_parseval", size,
                   fejer_energy_parseval(size, order), closed, tol)
        d = dirichlet(size, x)
        record("dirichlet_peak", size, dirichlet(size, 0.0), 1.0, tol)
        record("dirichlet_bound", size, float(np.max(np.abs(d))), 1.0, tol,
               passed=np.max(np.abs(d)) <= 1.0 + tol)
        record("dirichlet_energy", size, trapezoid(d ** 2, x), TWO_PI / (2 * size + 1), tol)

    tail_sizes = sorted(s for s in sizes if s >= 8)
    tails = [fejer_tail_mass(s, delta) for s in tail_sizes]
    for prev, nxt, prev_tail, next_tail in zip(tail_sizes, tail_sizes[1:], tails, tails[1:]):
        record(f"fejer_tail_decay_from_{prev}", nxt, next_tail, prev_tail, math.nan,
               passed=next_tail < prev_tail)

    report = pd.DataFrame(rows)
    failed = int((~report["passed"]).sum())
    if failed:
        logger.warning("Kernel identity suite: %d of %d checks failed", failed, len(report))
    else:
        logger.info("Kernel identity suite: all %d checks passed", len(report))
    return report
