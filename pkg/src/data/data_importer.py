"""
Tick and daily CSV ingestion.

Tick files have a `timestamp,price` header (ISO-8601 or epoch seconds) and an
optional `date` column for multi-day files. Line numbers in diagnostics are
1-based file lines, the header being line 1.
"""

import os
import re

import numpy as np
import pandas as pd

from src.core.fourier_core import rescale_to_2pi
from src.utils.config import MIN_DAY_OBSERVATIONS, SECONDS_PER_YEAR, get_logger
from src.utils.errors import DataFormatError, VolvolError

logger = get_logger(__name__)

_PARSER_LINE = re.compile(r"line (\d+)")


def _read_raw(source):
    try:
        frame = pd.read_csv(source, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError("no observations") from None
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        raise DataFormatError(f"malformed CSV: {e}", line=int(match.group(1)) if match else None) from None
    frame.columns = [c.strip().lower() for c in frame.columns]
    return frame


def _parse_timestamps(raw):
    numeric = pd.to_numeric(raw, errors="coerce")
    if numeric.notna().all():
        return pd.to_datetime(numeric, unit="s")
    parsed = pd.to_datetime(raw, errors="coerce", format="ISO8601", utc=True)
    return parsed.dt.tz_convert("UTC").dt.tz_localize(None)


def _first_bad_line(mask):
    # row i of the frame sits on file line i + 2
    return int(np.flatnonzero(mask.to_numpy())[0]) + 2


def read_tick_csv(source):
    """
    Read a tick CSV into a frame with timestamp, price and date columns.

    Args:
        source (str, Path or file-like): CSV file

    Returns:
        DataFrame: Rows sorted by date then timestamp
    """
    frame = _read_raw(source)
    missing = {"timestamp", "price"} - set(frame.columns)
    if missing:
        raise DataFormatError(f"missing column(s): {', '.join(sorted(missing))}", line=1)
    if frame.empty:
        raise DataFormatError("no observations")

    timestamps = _parse_timestamps(frame["timestamp"])
    if timestamps.isna().any():
        bad = timestamps.isna()
        line = _first_bad_line(bad)
        raise DataFormatError(f"unparseable timestamp {frame['timestamp'][bad].iloc[0]!r}", line=line)

    prices = pd.to_numeric(frame["price"], errors="coerce")
    bad = prices.isna() | ~(prices > 0)
    if bad.any():
        raise DataFormatError(f"price must be a positive number, got {frame['price'][bad].iloc[0]!r}",
                              line=_first_bad_line(bad))

    if "date" in frame.columns:
        dates = pd.to_datetime(frame["date"], errors="coerce")
        if dates.isna().any():
            bad = dates.isna()
            raise DataFormatError(f"unparseable date {frame['date'][bad].iloc[0]!r}",
                                  line=_first_bad_line(bad))
        dates = dates.dt.normalize()
    else:
        dates = timestamps.dt.normalize()

    ticks = pd.DataFrame({"timestamp": timestamps, "price": prices, "date": dates})
    return ticks.sort_values(["date", "timestamp"], kind="stable").reset_index(drop=True)


def split_days(ticks, min_observations=MIN_DAY_OBSERVATIONS):
    """
    Yield (date, day_frame) per trading day; overnight gaps are never bridged.

    Days with fewer than min_observations ticks are skipped with a warning;
    repeated timestamps keep the last price.
    """
    for date, day in ticks.groupby("date", sort=True):
        day = day.drop_duplicates("timestamp", keep="last")
        if len(day) < min_observations:
            logger.warning("Skipping %s: %d observations (< %d)", date.date(), len(day),
                           min_observations)
            continue
        yield date, day.reset_index(drop=True)


def day_seconds(day):
    """Seconds since the first tick of the day."""
    return (day["timestamp"] - day["timestamp"].iloc[0]).dt.total_seconds().to_numpy()


def day_series(day):
    """
    PriceSeries for one day; the horizon is the day's observed span in years.
    """
    seconds = day_seconds(day)
    horizon = seconds[-1] / SECONDS_PER_YEAR
    return rescale_to_2pi(seconds, day["price"].to_numpy(), horizon)


def daily_return(prices):
    """Close minus open log-price."""
    prices = np.asarray(prices, dtype=float)
    return float(np.log(prices[-1]) - np.log(prices[0]))


def previous_tick(times, prices, mesh_seconds):
    """
    Regularize irregular ticks onto a grid from the first to the last tick.

    Each grid point takes the last price observed at or before it.

    Returns:
        tuple: (grid_times, grid_prices)
    """
    times = np.asarray(times, dtype=float)
    prices = np.asarray(prices, dtype=float)
    if not mesh_seconds > 0:
        raise DataFormatError(f"mesh must be positive, got {mesh_seconds}")
    steps = int(np.floor((times[-1] - times[0]) / mesh_seconds + 1e-9))
    grid = times[0] + mesh_seconds * np.arange(steps + 1)
    index = np.searchsorted(times, grid + 1e-9 * mesh_seconds, side="right") - 1
    return grid, prices[index]


def regular_day_series(day, mesh_seconds):
    """
    PriceSeries for one day resampled onto a regular mesh with previous-tick.

    The realized estimators need this; the Fourier estimators take the raw ticks.
    """
    grid, prices = previous_tick(day_seconds(day), day["price"].to_numpy(), mesh_seconds)
    if grid.size < 2:
        raise DataFormatError(f"day spans less than one {mesh_seconds:g}s mesh")
    return rescale_to_2pi(grid, prices, grid[-1] / SECONDS_PER_YEAR)


def read_daily_csv(source, columns):
    """
    Read a daily CSV (e.g. the estimate output) with a date column.

    Args:
        source (str, Path or file-like): CSV file
        columns (list): Value columns that must be present

    Returns:
        DataFrame: date plus the requested numeric columns, sorted by date
    """
    frame = _read_raw(source)
    missing = {"date", *columns} - set(frame.columns)
    if missing:
        raise DataFormatError(f"missing column(s): {', '.join(sorted(missing))}", line=1)
    if frame.empty:
        raise DataFormatError("no observations")
    out = pd.DataFrame({"date": pd.to_datetime(frame["date"], errors="coerce")})
    if out["date"].isna().any():
        raise DataFormatError("unparseable date", line=_first_bad_line(out["date"].isna()))
    for column in columns:
        out[column] = pd.to_numeric(frame[column], errors="coerce")
        if out[column].isna().any():
            raise DataFormatError(f"non-numeric {column}", line=_first_bad_line(out[column].isna()))
    return out.sort_values("date").reset_index(drop=True)


def load_tick_file(file_path):
    """
    Dashboard helper: read a tick file without raising.

    Returns:
        tuple: (success, message, frame or None)
    """
    if not os.path.exists(file_path):
        return False, f"File not found: {file_path}", None
    try:
        ticks = read_tick_csv(file_path)
    except VolvolError as e:
        return False, f"Error importing data: {e}", None
    days = ticks["date"].nunique()
    return True, f"Loaded {len(ticks)} observations over {days} day(s).", ticks
