import math

import numpy as np
import pytest

import src.core.tuning as tuning
from src.core.fourier_core import rescale_to_2pi
from src.core.simulate import simulate
from src.core.tuning import (
    AdaptiveConfig,
    adaptive_cM,
    build_config,
    default_L,
    frequency_M,
    halve_M,
    nyquist_N,
)
from src.utils.errors import ConfigError

DAY = 1 / 252


def _flat_day(n):
    return rescale_to_2pi(np.arange(n + 1), np.full(n + 1, 10.0), horizon_T=DAY)


class TestFrequencies:
    def test_nyquist(self):
        assert nyquist_N(23400) == 11700
        assert nyquist_N(2) == 1
        assert nyquist_N(78) == 39
        with pytest.raises(ConfigError):
            nyquist_N(1)

    def test_M_rule(self):
        assert frequency_M(_flat_day(23400), 0.05, 11700) == 121
        assert frequency_M(_flat_day(78), 0.05, 39) == 7
        assert frequency_M(_flat_day(78), 5.0, 39) == 38
        assert frequency_M(_flat_day(78), 1e-6, 39) == 2

    def test_L_rule(self):
        assert default_L(23400, 121) == 13
        assert default_L(78, 7) == 3
        assert default_L(23400, 5) == 4

    def test_halve(self):
        assert halve_M(121) == 60
        assert halve_M(3) == 2

    def test_build_config(self):
        config = build_config(_flat_day(23400), c_M=0.05)
        assert (config.N, config.M, config.L) == (11700, 121, 13)
        assert config.rho_n == pytest.approx(2 * math.pi / 23400)
        assert config.c_N == pytest.approx(math.pi)

    def test_build_config_errors(self):
        with pytest.raises(ConfigError):
            build_config(_flat_day(5), c_M=0.05)
        with pytest.raises(ConfigError):
            build_config(_flat_day(78))


class TestAdaptiveConfig:
    def test_defaults(self):
        cfg = AdaptiveConfig()
        assert (cfg.c_M0, cfg.step, cfg.threshold, cfg.max_iters) == (0.03, 0.01, 0.25, 50)

    @pytest.mark.parametrize("kwargs", [
        {"c_M0": 0}, {"step": -0.01}, {"threshold": 1.0}, {"max_iters": 0}, {"rule": "median"},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ConfigError):
            AdaptiveConfig(**kwargs)


class TestAdaptiveSearch:
    def test_flat_standard_error_stops_after_one_step(self, monkeypatch):
        monkeypatch.setattr(tuning, "_standard_error", lambda series, c_M: 1.0)
        result = adaptive_cM(_flat_day(78))
        assert result.c_M == pytest.approx(0.04)
        assert len(result.trace) == 2
        assert result.converged

    def test_shrinking_steps(self, monkeypatch):
        monkeypatch.setattr(tuning, "_standard_error", lambda series, c_M: math.exp(-100 * c_M))
        result = adaptive_cM(_flat_day(78))
        assert result.c_M == pytest.approx(0.05)
        assert result.converged

    def test_previous_rule(self, monkeypatch):
        monkeypatch.setattr(tuning, "_standard_error", lambda series, c_M: math.exp(-100 * c_M))
        result = adaptive_cM(_flat_day(78), AdaptiveConfig(rule="previous", max_iters=4))
        assert not result.converged
        assert len(result.trace) == 5

    def test_non_convergence_returns_last_value(self, monkeypatch):
        monkeypatch.setattr(tuning, "_standard_error", lambda series, c_M: 1.0 + 200 * c_M)
        result = adaptive_cM(_flat_day(78), AdaptiveConfig(max_iters=5))
        assert not result.converged
        assert result.c_M == pytest.approx(0.08)
        assert len(result.trace) == 6

    def test_zero_initial_error_rejected(self, monkeypatch):
        monkeypatch.setattr(tuning, "_standard_error", lambda series, c_M: 0.0)
        with pytest.raises(ConfigError):
            adaptive_cM(_flat_day(78))

    def test_trace_bound_on_simulated_day(self):
        series = simulate("heston", 23400, seed=21).subsample(60)
        cfg = AdaptiveConfig(max_iters=10)
        try:
            result = adaptive_cM(series, cfg)
        except ConfigError:
            pytest.skip("feasible variance unavailable at the initial constant")
        assert len(result.trace) <= cfg.max_iters + 1
        assert all(se > 0 for _, se in result.trace if not math.isnan(se))


@pytest.mark.slow
def test_adaptive_constant_on_five_minute_heston_days():
    selected = []
    for seed in range(50):
        series = simulate("heston", 23400, seed=seed).subsample(300)
        try:
            selected.append(adaptive_cM(series).c_M)
        except ConfigError:
            continue
    assert len(selected) >= 25
    assert 0.03 < np.median(selected) < 0.15
