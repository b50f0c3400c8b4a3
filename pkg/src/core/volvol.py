"""
Fourier estimators of integrated volatility of volatility.

Point estimates are computed on the [0, 2π] clock from the volatility
coefficients c_k(v) produced by fourier_core.coeffs_v. The averaged scale
is c_0(γ²) = (1/2π)∫γ², the integrated scale multiplies it by 2π.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from src.core.fourier_core import TWO_PI, coeffs_dp, coeffs_v, integrated_variance
from src.utils.config import DEFAULT_IOTA, DEFAULT_LEVEL, REALITY_TOL, get_logger
from src.utils.errors import (
    ConfigError,
    ImaginaryResidueError,
    VarianceUnavailableError,
)

logger = get_logger(__name__)


@dataclass(frozen=True)
class EstimatorConfig:
    """Cutting frequencies and the clock constants they imply."""

    N: int
    M: int
    L: int
    c_N: float
    c_M: float
    rho_n: float
    iota: float = DEFAULT_IOTA

    def __post_init__(self):
        if not (self.N >= 1 and self.M >= 1 and self.L >= 1):
            raise ConfigError(f"N, M, L must be positive, got N={self.N}, M={self.M}, L={self.L}")
        if not self.M < self.N:
            raise ConfigError(f"M must be smaller than N, got M={self.M}, N={self.N}")
        if not self.L < self.M:
            raise ConfigError(f"L must be smaller than M, got L={self.L}, M={self.M}")
        if not (self.c_N > 0 and self.c_M > 0 and self.rho_n > 0):
            raise ConfigError("c_N, c_M and rho_n must be positive")
        if not 0 < self.iota < 0.4:
            raise ConfigError(f"iota must lie in (0, 2/5), got {self.iota}")

    @classmethod
    def from_frequencies(cls, N, M, L, rho_n, iota=DEFAULT_IOTA):
        """Build a config whose constants are c_N = Nρ and c_M = Mρ^(1/2), ρ in radians."""
        return cls(N=int(N), M=int(M), L=int(L), c_N=N * rho_n, c_M=M * math.sqrt(rho_n),
                   rho_n=float(rho_n), iota=iota)

    @property
    def c_M_raw(self):
        """Constant of the non-debiased estimator, M ρ^ι."""
        return self.M * self.rho_n ** self.iota

    @property
    def k_range(self):
        """Highest c_k(v) frequency the feasible variances touch."""
        return self.M + self.L

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class VolvolEstimate:
    """Point estimate with its feasible variance and confidence interval."""

    integrated_volvol: float
    averaged_volvol: float
    asymptotic_variance: float
    std_error: float
    ci_low: float
    ci_high: float
    debias_applied: bool
    negative_flag: bool
    quarticity: float = math.nan
    integrated_variance: float = math.nan
    level: float = DEFAULT_LEVEL
    variance_available: bool = True
    diagnostic: str = ""

    def to_dict(self):
        return asdict(self)


def eta(a):
    """r(1 - r) / (2a²) with r the fractional part of a."""
    if not a > 0:
        raise ConfigError(f"eta needs a positive argument, got {a}")
    r = a - math.floor(a)
    return r * (1.0 - r) / (2.0 * a * a)


def bias_constant_K(c_M, c_N):
    """Bias-correction constant (1/3)(c_M²/2π)(1 + 2η(c_N/π))."""
    if c_M < 0 or not c_N > 0:
        raise ConfigError(f"need c_M >= 0 and c_N > 0, got c_M={c_M}, c_N={c_N}")
    if c_M == 0:
        return 0.0
    return (c_M ** 2 / TWO_PI) * (1.0 + 2.0 * eta(c_N / math.pi)) / 3.0


def real_part(terms, what):
    """Sum complex terms and return the real part, rejecting a non-negligible imaginary part."""
    terms = np.asarray(terms, dtype=complex)
    total = complex(np.sum(terms))
    scale = float(np.sum(np.abs(terms)))
    if abs(total.imag) > REALITY_TOL * scale:
        raise ImaginaryResidueError(
            f"{what}: imaginary residue {total.imag:.3e} exceeds {REALITY_TOL:g} x {scale:.3e}")
    return total.real


def _fejer_weights(M):
    h = np.arange(-M, M + 1)
    return h, 1.0 - np.abs(h) / (M + 1)


def _check_k(vcoeffs, M, ks):
    ks = np.atleast_1d(np.asarray(ks, dtype=int))
    k_abs = int(np.max(np.abs(ks))) if ks.size else 0
    if k_abs > 2 * M:
        raise ConfigError(f"coefficient index |k|={k_abs} exceeds 2M={2 * M}")
    vcoeffs.require(M + k_abs, f"coefficients at |k|={k_abs} with M={M}")
    return ks


def sigma4_coefficients(vcoeffs, M, ks):
    """Vector of Σ_{|h|≤M} c_h(v) c_{k-h}(v) for each k in ks."""
    ks = _check_k(vcoeffs, M, ks)
    h, _ = _fejer_weights(M)
    left = vcoeffs[h]
    right = vcoeffs.values[ks[:, None] - h[None, :] + vcoeffs.k_max]
    return right @ left


def volvol_coefficients(vcoeffs, M, ks, debias=True, K=0.0):
    """Vector of Fejér-weighted γ² coefficient estimates for each k in ks."""
    ks = _check_k(vcoeffs, M, ks)
    h, weights = _fejer_weights(M)
    left = vcoeffs[h]
    right = vcoeffs.values[ks[:, None] - h[None, :] + vcoeffs.k_max]
    factors = weights[None, :] * h[None, :] * (h[None, :] - ks[:, None])
    values = (TWO_PI / (M + 1)) * ((factors * right) @ left)
    if debias:
        values = values - K * TWO_PI * (right @ left)
    return values


def coeff_sigma4(vcoeffs, M, k):
    """Estimate of c_k(σ⁴) for |k| ≤ 2M."""
    return complex(sigma4_coefficients(vcoeffs, M, [k])[0])


def coeff_volvol(vcoeffs, M, k, debias=True, K=0.0):
    """Estimate of c_k(γ²), bias-corrected by K·2π·c_k(σ⁴) when debias is set."""
    return complex(volvol_coefficients(vcoeffs, M, [k], debias, K)[0])


def quarticity(vcoeffs, M):
    """2π Σ_{|k|≤M} c_k(v) c_{-k}(v), the Fourier estimate of ∫σ⁴."""
    vcoeffs.require(M, "quarticity")
    k = np.arange(-M, M + 1)
    return TWO_PI * real_part(vcoeffs[k] * vcoeffs[-k], "quarticity")


def volvol_raw(vcoeffs, M):
    """Positive estimate of c_0(γ²): (2π/(M+1)) Σ (1 - |k|/(M+1)) k² c_k(v) c_{-k}(v)."""
    vcoeffs.require(M, "volvol_raw")
    k, weights = _fejer_weights(M)
    terms = weights * k ** 2 * vcoeffs[k] * vcoeffs[-k]
    return (TWO_PI / (M + 1)) * real_part(terms, "volvol_raw")


def _symmetric_sum(left, right, what):
    # left/right are indexed k = -L..L; Σ a_k b_{-k}
    return real_part(left * right[::-1], what)


def feasible_variance_lambda(vcoeffs, config):
    """
    Feasible asymptotic variance of the bias-corrected estimator.

    K(c_M) V1 + K̃(c_M, c_N) V2 + K(c_M, c_N) V3, where V1, V2, V3 are symmetric
    sums over |k| ≤ L of the γ² and σ⁴ coefficient estimates. The result is
    not clipped; a negative value is returned as is.
    """
    M, L = config.M, config.L
    vcoeffs.require(M + L, "feasible_variance_lambda")
    ks = np.arange(-L, L + 1)
    K = bias_constant_K(config.c_M, config.c_N)
    g2 = volvol_coefficients(vcoeffs, M, ks, debias=True, K=K)
    s4 = sigma4_coefficients(vcoeffs, M, ks)
    v1 = _symmetric_sum(g2, g2, "V1")
    v2 = _symmetric_sum(g2, s4, "V2")
    v3 = _symmetric_sum(s4, s4, "V3")
    boundary = 1.0 + 2.0 * eta(config.c_N / math.pi)
    k1 = 4.0 / (3.0 * config.c_M)
    k2 = 16.0 / 15.0 * config.c_M * boundary
    k3 = 16.0 / 105.0 * config.c_M ** 3 * boundary ** 2
    return k1 * v1 + k2 * v2 + k3 * v3


def feasible_variance_gamma(vcoeffs, config):
    """(4 / (3 M ρ^ι)) Σ_{|k|≤L} c_k(γ²) c_{-k}(γ²) with non-debiased coefficients."""
    M, L = config.M, config.L
    vcoeffs.require(M + L, "feasible_variance_gamma")
    ks = np.arange(-L, L + 1)
    g2 = volvol_coefficients(vcoeffs, M, ks, debias=False)
    return 4.0 / (3.0 * config.c_M_raw) * _symmetric_sum(g2, g2, "Gamma")


def _rate(config, debias):
    return config.rho_n ** 0.25 if debias else config.rho_n ** (config.iota / 2.0)


def _check_level(level):
    if not 0 < level < 1:
        raise ConfigError(f"confidence level must lie in (0, 1), got {level}")


def confidence_interval(estimate, config, level=DEFAULT_LEVEL):
    """
    Normal confidence interval on the integrated scale.

    Built on the averaged scale as estimate ± z·rate·√variance and mapped by 2π.

    Returns:
        tuple: (low, high)
    """
    _check_level(level)
    variance = estimate.asymptotic_variance
    if not variance >= 0:
        raise VarianceUnavailableError(
            f"asymptotic variance is {variance}; no confidence interval available")
    z = stats.norm.ppf((1.0 + level) / 2.0)
    half_width = z * _rate(config, estimate.debias_applied) * math.sqrt(variance)
    return (TWO_PI * (estimate.averaged_volvol - half_width),
            TWO_PI * (estimate.averaged_volvol + half_width))


def _assemble(averaged, variance, config, debias, level, q, iv):
    _check_level(level)
    negative = bool(debias and averaged < 0)
    if negative:
        logger.warning("Bias-corrected vol-of-vol estimate is negative (%.3e)", averaged)
    fields = dict(
        integrated_volvol=TWO_PI * averaged,
        averaged_volvol=averaged,
        asymptotic_variance=variance,
        debias_applied=debias,
        negative_flag=negative,
        quarticity=q,
        integrated_variance=iv,
        level=level,
    )
    if variance >= 0:
        partial = VolvolEstimate(std_error=_rate(config, debias) * math.sqrt(variance),
                                 ci_low=math.nan, ci_high=math.nan, **fields)
        low, high = confidence_interval(partial, config, level)
        return VolvolEstimate(std_error=partial.std_error, ci_low=low, ci_high=high, **fields)

    diagnostic = f"negative feasible variance {variance:.3e}; interval unavailable"
    logger.warning("Feasible asymptotic variance is negative (%.3e); CI not reported", variance)
    return VolvolEstimate(std_error=math.nan, ci_low=math.nan, ci_high=math.nan,
                          variance_available=False, diagnostic=diagnostic, **fields)


def volvol_debiased(vcoeffs, config, level=DEFAULT_LEVEL):
    """
    Rate-efficient estimate γ̂² = c_0(γ²) - K σ̂⁴ with feasible variance Λ and CI.

    Negative point estimates are kept and flagged.
    """
    vcoeffs.require(config.k_range, "volvol_debiased")
    q = quarticity(vcoeffs, config.M)
    K = bias_constant_K(config.c_M, config.c_N)
    averaged = volvol_raw(vcoeffs, config.M) - K * q
    variance = feasible_variance_lambda(vcoeffs, config)
    return _assemble(averaged, variance, config, True, level, q, integrated_variance(vcoeffs))


def volvol_raw_estimate(vcoeffs, config, level=DEFAULT_LEVEL):
    """Non-debiased estimate with feasible variance Γ and the ρ^(ι/2) rate."""
    vcoeffs.require(config.k_range, "volvol_raw_estimate")
    averaged = volvol_raw(vcoeffs, config.M)
    variance = feasible_variance_gamma(vcoeffs, config)
    return _assemble(averaged, variance, config, False, level,
                     quarticity(vcoeffs, config.M), integrated_variance(vcoeffs))


def estimate_series(series, config, debias=True, level=DEFAULT_LEVEL):
    """
    Full pipeline for one observation window.

    Args:
        series (PriceSeries): Observations on the [0, 2π] clock
        config (EstimatorConfig): Frequencies and constants
        debias (bool): Bias-corrected estimator if True, positive estimator otherwise
        level (float): Confidence level of the interval

    Returns:
        VolvolEstimate: The estimate on the [0, 2π] clock
    """
    dp = coeffs_dp(series, config.N + config.k_range)
    vcoeffs = coeffs_v(dp, config.N, config.k_range)
    logger.debug("Estimating with N=%d M=%d L=%d on n=%d", config.N, config.M, config.L,
                 series.n_intervals)
    if debias:
        return volvol_debiased(vcoeffs, config, level)
    return volvol_raw_estimate(vcoeffs, config, level)
