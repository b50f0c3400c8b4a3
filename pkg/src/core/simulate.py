"""
Heston and stochastic vol-of-vol path simulation.

Full-truncation Euler–Maruyama in year-fraction units: the square-root
terms and the mean-reverting drifts are evaluated at max(x, 0), and the
stored variance and vol-of-vol paths are truncated at zero. Random draws
come from a numpy Generator seeded per path; the stepping loops are numba
kernels that consume them.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numba import njit
from scipy.integrate import trapezoid

from src.core.fourier_core import series_from_log_prices
from src.utils.config import DEFAULT_HORIZON, SECONDS_PER_YEAR, get_logger
from src.utils.errors import ConfigError, SampleSizeError

logger = get_logger(__name__)


@dataclass(frozen=True)
class HestonParams:
    mu: float = 0.1
    theta: float = 5.0
    alpha: float = 0.2
    gamma: float = 0.5
    rho: float = -0.8
    p0: float = 1.0
    v0: float = 0.2

    def __post_init__(self):
        if not (self.theta > 0 and self.alpha > 0 and self.v0 > 0):
            raise ConfigError("theta, alpha and v0 must be positive")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be nonnegative, got {self.gamma}")
        if abs(self.rho) > 1:
            raise ConfigError(f"rho must lie in [-1, 1], got {self.rho}")


@dataclass(frozen=True)
class SvvParams:
    mu: float = 0.1
    theta: float = 5.0
    alpha: float = 0.2
    chi: float = 7.0
    eta_bar: float = 0.1
    xi: float = 0.8
    rho: float = -0.8
    p0: float = 1.0
    v0: float = 0.2
    g0: float = 0.1

    def __post_init__(self):
        if not (self.theta > 0 and self.alpha > 0 and self.v0 > 0):
            raise ConfigError("theta, alpha and v0 must be positive")
        if not (self.chi > 0 and self.eta_bar > 0 and self.g0 > 0):
            raise ConfigError("chi, eta_bar and g0 must be positive")
        if self.xi < 0:
            raise ConfigError(f"xi must be nonnegative, got {self.xi}")
        if abs(self.rho) > 1:
            raise ConfigError(f"rho must lie in [-1, 1], got {self.rho}")


MODEL_PARAMS = {"heston": HestonParams, "svv": SvvParams}


@dataclass(frozen=True, eq=False)
class SimPath:
    """One simulated trajectory on a uniform grid with its ground truth."""

    time_seconds: np.ndarray
    log_prices: np.ndarray
    v_path: np.ndarray
    g2_path: np.ndarray
    horizon: float
    true_integrated_volvol: float
    true_integrated_variance: float
    true_quarticity: float
    seed: int
    model: str = "heston"
    series: object = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "series",
                           series_from_log_prices(self.time_seconds, self.log_prices, self.horizon))

    @property
    def n_steps(self):
        return self.time_seconds.size - 1

    @property
    def mesh_seconds(self):
        return float(self.time_seconds[1] - self.time_seconds[0])

    def subsample(self, step):
        """Regular observations every `step` grid points, endpoints included."""
        step = int(step)
        if step < 1 or self.n_steps % step:
            raise ConfigError(f"step {step} does not divide the {self.n_steps} simulation steps")
        if step == 1:
            return self.series
        index = slice(None, None, step)
        return series_from_log_prices(self.time_seconds[index], self.log_prices[index], self.horizon)

    def to_frame(self):
        return pd.DataFrame({"time": self.time_seconds, "log_price": self.log_prices,
                             "v": self.v_path, "g2": self.g2_path})


def path_seed(master_seed, path_index):
    """Independent per-path seed derived from (master_seed, path_index)."""
    sequence = np.random.SeedSequence(int(master_seed), spawn_key=(int(path_index),))
    return int(sequence.generate_state(1, np.uint64)[0])


@njit(cache=True)
def _heston_kernel(p0, v0, mu, theta, alpha, gamma, rho, dt, substeps, normals,
                   log_prices, variances):
    sqrt_dt = math.sqrt(dt)
    rho_bar = math.sqrt(1.0 - rho * rho)
    p = p0
    v = v0
    log_prices[0] = p
    variances[0] = max(v, 0.0)
    k = 0
    for i in range(log_prices.size - 1):
        for _ in range(substeps):
            vp = max(v, 0.0)
            sv = math.sqrt(vp)
            dw = normals[k, 0]
            dz = rho * dw + rho_bar * normals[k, 1]
            p += (mu - 0.5 * vp) * dt + sv * sqrt_dt * dw
            v += theta * (alpha - vp) * dt + gamma * sv * sqrt_dt * dz
            k += 1
        log_prices[i + 1] = p
        variances[i + 1] = max(v, 0.0)


@njit(cache=True)
def _svv_kernel(p0, v0, g0, mu, theta, alpha, chi, eta_bar, xi, rho, dt, substeps, normals,
                log_prices, variances, volvols):
    sqrt_dt = math.sqrt(dt)
    rho_bar = math.sqrt(1.0 - rho * rho)
    p = p0
    v = v0
    g = g0
    log_prices[0] = p
    variances[0] = max(v, 0.0)
    volvols[0] = max(g, 0.0)
    k = 0
    for i in range(log_prices.size - 1):
        for _ in range(substeps):
            vp = max(v, 0.0)
            gp = max(g, 0.0)
            dw = normals[k, 0]
            dz = rho * dw + rho_bar * normals[k, 1]
            p += (mu - 0.5 * vp) * dt + math.sqrt(vp) * sqrt_dt * dw
            v += theta * (alpha - vp) * dt + math.sqrt(gp) * sqrt_dt * dz
            g += chi * (eta_bar - gp) * dt + xi * math.sqrt(gp) * sqrt_dt * normals[k, 2]
            k += 1
        log_prices[i + 1] = p
        variances[i + 1] = max(v, 0.0)
        volvols[i + 1] = max(g, 0.0)


def _check_grid(n_steps, horizon, substeps):
    if n_steps < 2:
        raise ConfigError(f"n_steps must be at least 2, got {n_steps}")
    if not horizon > 0:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    if substeps < 1:
        raise ConfigError(f"substeps must be at least 1, got {substeps}")


def _time_grid(n_steps, horizon):
    return np.arange(n_steps + 1) * (horizon / n_steps * SECONDS_PER_YEAR)


def simulate_heston(params, n_steps, horizon=DEFAULT_HORIZON, seed=0, substeps=1):
    """
    Simulate the Heston model on a uniform grid of n_steps intervals.

    Args:
        params (HestonParams): Model parameters
        n_steps (int): Number of recorded intervals over the horizon
        horizon (float): Horizon in year fractions
        seed (int): Seed of the path's random stream
        substeps (int): Euler steps per recorded interval

    Returns:
        SimPath: Trajectory with γ² = γ²v and its trapezoid ground truth
    """
    _check_grid(n_steps, horizon, substeps)
    rng = np.random.default_rng(seed)
    dt = horizon / n_steps
    normals = rng.standard_normal((n_steps * substeps, 2))
    log_prices = np.empty(n_steps + 1)
    v_path = np.empty(n_steps + 1)
    _heston_kernel(params.p0, params.v0, params.mu, params.theta, params.alpha, params.gamma,
                   params.rho, dt / substeps, substeps, normals, log_prices, v_path)
    gamma2 = params.gamma ** 2
    return SimPath(
        time_seconds=_time_grid(n_steps, horizon),
        log_prices=log_prices,
        v_path=v_path,
        g2_path=gamma2 * v_path,
        horizon=horizon,
        true_integrated_volvol=gamma2 * trapezoid(v_path, dx=dt),
        true_integrated_variance=trapezoid(v_path, dx=dt),
        true_quarticity=trapezoid(v_path ** 2, dx=dt),
        seed=int(seed),
        model="heston",
    )


def simulate_svv(params, n_steps, horizon=DEFAULT_HORIZON, seed=0, substeps=1):
    """Simulate the stochastic vol-of-vol model; γ² follows its own square-root diffusion."""
    _check_grid(n_steps, horizon, substeps)
    rng = np.random.default_rng(seed)
    dt = horizon / n_steps
    normals = rng.standard_normal((n_steps * substeps, 3))
    log_prices = np.empty(n_steps + 1)
    v_path = np.empty(n_steps + 1)
    g2_path = np.empty(n_steps + 1)
    _svv_kernel(params.p0, params.v0, params.g0, params.mu, params.theta, params.alpha,
                params.chi, params.eta_bar, params.xi, params.rho, dt / substeps, substeps,
                normals, log_prices, v_path, g2_path)
    return SimPath(
        time_seconds=_time_grid(n_steps, horizon),
        log_prices=log_prices,
        v_path=v_path,
        g2_path=g2_path,
        horizon=horizon,
        true_integrated_volvol=trapezoid(g2_path, dx=dt),
        true_integrated_variance=trapezoid(v_path, dx=dt),
        true_quarticity=trapezoid(v_path ** 2, dx=dt),
        seed=int(seed),
        model="svv",
    )


def simulate(model, n_steps, horizon=DEFAULT_HORIZON, seed=0, substeps=1, params=None):
    """Dispatch on the model name ('heston' or 'svv') with default parameters."""
    if model not in MODEL_PARAMS:
        raise ConfigError(f"unknown model: {model}")
    params = params or MODEL_PARAMS[model]()
    runner = simulate_heston if model == "heston" else simulate_svv
    return runner(params, n_steps, horizon, seed, substeps)


def poisson_resample(path, mean_duration, seed):
    """
    Observe a simulated path at exponential inter-arrival times.

    Arrivals are snapped to the previous grid tick; a tick already taken
    moves the arrival to the next free tick. Arrivals past the horizon are
    dropped and the closing tick is always observed.

    Args:
        path (SimPath): Path simulated on a grid finer than mean_duration
        mean_duration (float): Mean duration between observations, seconds
        seed (int): Seed of the arrival stream

    Returns:
        PriceSeries: Irregularly sampled observations on [0, 2π]
    """
    mesh = path.mesh_seconds
    if not mean_duration > mesh:
        raise ConfigError(
            f"mean duration {mean_duration}s must exceed the simulation mesh {mesh:g}s")
    rng = np.random.default_rng(seed)
    span = path.time_seconds[-1]
    expected = span / mean_duration
    arrivals = np.cumsum(rng.exponential(mean_duration, int(expected + 10 * math.sqrt(expected) + 10)))
    while arrivals[-1] < span:
        more = np.cumsum(rng.exponential(mean_duration, int(expected) + 10)) + arrivals[-1]
        arrivals = np.concatenate([arrivals, more])
    arrivals = arrivals[arrivals < span]

    ticks = np.concatenate([[0], np.floor(arrivals / mesh + 1e-9).astype(np.int64)])
    offsets = np.arange(ticks.size)
    ticks = np.maximum.accumulate(ticks - offsets) + offsets
    ticks = ticks[ticks < path.n_steps]
    ticks = np.append(ticks, path.n_steps)
    if ticks.size < 2:
        raise SampleSizeError("fewer than 2 observations survive Poisson sampling")
    logger.debug("Poisson sampling kept %d of %d grid points", ticks.size, path.n_steps + 1)
    return series_from_log_prices(path.time_seconds[ticks], path.log_prices[ticks], path.horizon)
