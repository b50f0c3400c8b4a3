"""
Frequency selection: Nyquist N, the c_M rule for M, default L and the
adaptive c_M search used on empirical days.

Constants are derived from the average mesh 2π/n, which is the mesh itself
on a regular grid. In horizon units that mesh is T/n, so c_M = 0.05 gives
M = 121 on a one-second day and M = 7 on a five-minute day.
"""

import math
from dataclasses import dataclass, field

from src.core.fourier_core import TWO_PI
from src.core.volvol import EstimatorConfig, estimate_series
from src.utils.config import DEFAULT_ADAPTIVE, DEFAULT_IOTA, get_logger
from src.utils.errors import ConfigError

logger = get_logger(__name__)


def nyquist_N(n):
    """Largest usable convolution frequency ⌊n/2⌋ on n increments."""
    if n < 2:
        raise ConfigError(f"need at least 2 increments, got {n}")
    return n // 2


def _horizon_mesh(series):
    return series.mean_mesh * series.horizon_T / TWO_PI


def frequency_M(series, c_M, N):
    """M = ⌊c_M ρ^(-1/2)⌋ with ρ the horizon-unit mesh, at least 2 and below N."""
    if not c_M > 0:
        raise ConfigError(f"c_M must be positive, got {c_M}")
    M = max(2, math.floor(c_M / math.sqrt(_horizon_mesh(series))))
    return min(M, N - 1)


def default_L(n, M):
    """L = ⌈n^(1/4)⌉, kept below M."""
    return max(1, min(math.ceil(n ** 0.25), M - 1))


def halve_M(M_star):
    """M = ⌊M*/2⌋ for irregularly sampled days, M* the regular-grid choice."""
    return max(2, int(M_star) // 2)


def build_config(series, c_M=None, M=None, N=None, L=None, iota=DEFAULT_IOTA):
    """
    Resolve the cutting frequencies for one series.

    Args:
        series (PriceSeries): Observations on the [0, 2π] clock
        c_M (float, optional): Constant of the M rule; ignored when M is given
        M (int, optional): Explicit Fejér cutting frequency
        N (int, optional): Convolution frequency, Nyquist by default
        L (int, optional): Variance-estimator frequency, ⌈n^(1/4)⌉ by default
        iota (float): Rate exponent of the positive estimator

    Returns:
        EstimatorConfig: Validated configuration
    """
    n = series.n_intervals
    N = nyquist_N(n) if N is None else int(N)
    if N < 3:
        raise ConfigError(f"N={N} leaves no room for L < M < N; need at least 6 increments")
    if M is None:
        if c_M is None:
            raise ConfigError("either c_M or M must be given")
        M = frequency_M(series, c_M, N)
    L = default_L(n, M) if L is None else int(L)
    return EstimatorConfig.from_frequencies(N, M, L, series.mean_mesh, iota)


@dataclass(frozen=True)
class AdaptiveConfig:
    c_M0: float = DEFAULT_ADAPTIVE["c_M0"]
    step: float = DEFAULT_ADAPTIVE["step"]
    threshold: float = DEFAULT_ADAPTIVE["threshold"]
    max_iters: int = DEFAULT_ADAPTIVE["max_iters"]
    rule: str = "initial"

    def __post_init__(self):
        if not (self.c_M0 > 0 and self.step > 0):
            raise ConfigError("c_M0 and step must be positive")
        if not 0 < self.threshold < 1:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.rule not in ("initial", "previous"):
            raise ConfigError(f"rule must be 'initial' or 'previous', got {self.rule}")


@dataclass
class AdaptiveResult:
    c_M: float
    trace: list = field(default_factory=list)
    converged: bool = True


def _standard_error(series, c_M):
    config = build_config(series, c_M=c_M)
    return estimate_series(series, config, debias=True).std_error


def adaptive_cM(series, cfg=None):
    """
    Increase c_M on a grid until the standard error stops moving.

    Stops at the first j >= 1 where |SE_j - SE_{j-1}| divided by SE_0
    (rule='initial') or by SE_{j-1} (rule='previous') falls below the
    threshold.

    Returns:
        AdaptiveResult: selected c_M, trace of (c_M, std_error), converged flag
    """
    cfg = cfg or AdaptiveConfig()
    se0 = _standard_error(series, cfg.c_M0)
    if not (math.isfinite(se0) and se0 > 0):
        raise ConfigError(f"standard error at c_M0={cfg.c_M0} is {se0}; cannot normalize")
    trace = [(cfg.c_M0, se0)]
    for j in range(1, cfg.max_iters + 1):
        c_M = cfg.c_M0 + j * cfg.step
        se = _standard_error(series, c_M)
        previous = trace[-1][1]
        trace.append((c_M, se))
        scale = se0 if cfg.rule == "initial" else previous
        if abs(se - previous) / scale < cfg.threshold:
            return AdaptiveResult(c_M, trace, converged=True)

    logger.warning("Adaptive c_M did not converge in %d iterations; using c_M=%.4f",
                   cfg.max_iters, trace[-1][0])
    return AdaptiveResult(trace[-1][0], trace, converged=False)
