"""
Stylized-fact statistics over daily estimate series.
"""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats
from statsmodels.stats.diagnostic import normal_ad
from statsmodels.tsa.stattools import acf as sample_acf

from src.utils.config import DEFAULT_MAX_LAG, MIN_YEAR_OBSERVATIONS, get_logger
from src.utils.errors import ConfigError, InvalidSeriesError, SampleSizeError

logger = get_logger(__name__)

BAND_Z = 1.96


@dataclass(frozen=True, eq=False)
class DailySeries:
    """One value per calendar date, dates strictly increasing."""

    dates: pd.DatetimeIndex
    values: np.ndarray
    label: str = "value"

    def __post_init__(self):
        dates = pd.DatetimeIndex(pd.to_datetime(self.dates)).normalize()
        values = np.asarray(self.values, dtype=float)
        if dates.size != values.size:
            raise ConfigError(f"{dates.size} dates vs {values.size} values")
        if dates.size > 1 and not (np.diff(dates.asi8) > 0).all():
            raise InvalidSeriesError(f"{self.label}: dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_frame(cls, frame, value_column, date_column="date", label=None):
        ordered = frame.sort_values(date_column)
        return cls(ordered[date_column], ordered[value_column].to_numpy(), label or value_column)

    def to_series(self):
        return pd.Series(self.values, index=self.dates, name=self.label)

    def __len__(self):
        return self.values.size


def _is_constant(values):
    return bool(np.ptp(values) == 0)


def sample_stats(series):
    """
    Mean, median, std (n-1), min, max, skewness and non-excess kurtosis.

    Skewness and kurtosis are NaN for a constant series, which is flagged
    as degenerate.
    """
    x = series.values
    if x.size < 2:
        raise SampleSizeError(f"{series.label}: need at least 2 values, got {x.size}")
    degenerate = _is_constant(x)
    return pd.Series({
        "label": series.label,
        "n": x.size,
        "mean": float(np.mean(x)),
        "median": float(np.median(x)),
        "std": float(np.std(x, ddof=1)),
        "min": float(np.min(x)),
        "max": float(np.max(x)),
        "skewness": math.nan if degenerate else float(stats.skew(x)),
        "kurtosis": math.nan if degenerate else float(stats.kurtosis(x, fisher=False)),
        "degenerate": degenerate,
    })


def acf(series, max_lag=DEFAULT_MAX_LAG):
    """Sample autocorrelations for lags 0..max_lag with the ±1.96/√n white-noise band."""
    x = series.values
    n = x.size
    if not 1 <= max_lag < n / 4:
        raise SampleSizeError(f"max_lag must lie in [1, n/4) = [1, {n / 4:g}), got {max_lag}")
    if _is_constant(x):
        raise SampleSizeError(f"{series.label}: autocorrelation undefined for a constant series")
    values = sample_acf(x, nlags=max_lag, fft=False)
    band = BAND_Z / math.sqrt(n)
    table = pd.DataFrame({"lag": np.arange(max_lag + 1), "autocorrelation": values, "band": band})
    table["outside_band"] = (table["lag"] > 0) & (table["autocorrelation"].abs() > band)
    return table


def _pearson(a, b):
    if _is_constant(a) or _is_constant(b):
        return math.nan
    return float(np.corrcoef(a, b)[0, 1])


def yearly_correlations(volvol, vol, returns, min_days=MIN_YEAR_OBSERVATIONS):
    """
    Pearson correlations per calendar year on the dates common to all three series.

    Years with fewer than min_days common dates are flagged and left out of
    the average row.
    """
    frame = pd.concat([volvol.to_series().rename("volvol"), vol.to_series().rename("vol"),
                       returns.to_series().rename("ret")], axis=1, join="inner")
    if frame.empty:
        raise SampleSizeError("no common dates across the three series")
    rows = []
    for year, group in frame.groupby(frame.index.year):
        undersized = len(group) < min_days
        if undersized:
            logger.warning("Year %d has %d common days (< %d); excluded from averages",
                           year, len(group), min_days)
        rows.append({
            "year": str(year),
            "n_days": len(group),
            "corr_volvol_vol": _pearson(group["volvol"], group["vol"]),
            "corr_vol_ret": _pearson(group["vol"], group["ret"]),
            "corr_volvol_ret": _pearson(group["volvol"], group["ret"]),
            "undersized": undersized,
        })
    table = pd.DataFrame(rows)
    usable = table[~table["undersized"]]
    columns = ["corr_volvol_vol", "corr_vol_ret", "corr_volvol_ret"]
    average = {"year": "average", "n_days": int(usable["n_days"].sum()), "undersized": usable.empty}
    average.update({c: float(usable[c].mean()) if not usable.empty else math.nan for c in columns})
    return pd.concat([table, pd.DataFrame([average])], ignore_index=True)


def lognormality_tests(series, alpha=0.05, min_days=MIN_YEAR_OBSERVATIONS):
    """
    Jarque–Bera and Anderson–Darling normality tests of log-values per year.

    Jarque–Bera uses the asymptotic χ²(2) p-value; Anderson–Darling uses
    estimated mean and variance with the D'Agostino–Stephens p-value. A
    constant year is reported as a degenerate rejection. Years shorter than
    min_days keep their statistics but get no reject decision (NaN).
    """
    bad = ~(series.values > 0)
    if bad.any():
        dates = ", ".join(d.strftime("%Y-%m-%d") for d in series.dates[bad])
        raise InvalidSeriesError(f"{series.label}: non-positive values on {dates}")

    logs = pd.Series(np.log(series.values), index=series.dates)
    rows = []
    for year, group in logs.groupby(logs.index.year):
        x = group.to_numpy()
        row = {"year": year, "n": x.size, "undersized": x.size < min_days, "degenerate": False}
        if x.size < 3 or _is_constant(x):
            row.update(jb_statistic=math.nan, jarque_bera_p=0.0, ad_statistic=math.nan,
                       anderson_darling_p=0.0, degenerate=True)
        else:
            jb = stats.jarque_bera(x)
            ad_statistic, ad_p = normal_ad(x)
            row.update(jb_statistic=float(jb.statistic), jarque_bera_p=float(jb.pvalue),
                       ad_statistic=float(ad_statistic), anderson_darling_p=float(ad_p))
        if row["undersized"]:
            row["jb_reject"] = row["ad_reject"] = math.nan
        else:
            row["jb_reject"] = row["jarque_bera_p"] < alpha
            row["ad_reject"] = row["anderson_darling_p"] < alpha
        rows.append(row)
    return pd.DataFrame(rows)
