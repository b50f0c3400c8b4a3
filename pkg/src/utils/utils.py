import re
import math
import datetime

import numpy as np
import pandas as pd

_DURATION_UNITS = {
    "": 1.0,
    "s": 1.0,
    "sec": 1.0,
    "m": 60.0,
    "min": 60.0,
    "h": 3600.0,
}


def safe_float(value, default=math.nan):
    """Safely convert a value to float, returning `default` if invalid."""
    if value is None or (not isinstance(value, str) and pd.isna(value)):
        return default
    try:
        return float(value)
    except (ValueError, TypeError):
        return default


def format_number(value, digits=9):
    """Format a float with a fixed number of significant digits."""
    value = safe_float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{digits}g}"


def round_sig(value, digits=9):
    """Round to significant digits; used before writing JSON summaries."""
    value = safe_float(value)
    if not math.isfinite(value):
        return None
    return float(f"{value:.{digits}g}")


def jsonable(obj, digits=9):
    """Recursively convert numpy/pandas objects into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v, digits) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(obj, digits)
    if isinstance(obj, (datetime.date, pd.Timestamp)):
        return obj.isoformat()
    return obj


def parse_duration(text):
    """
    Parse a duration like '1s', '5min', '30', '1.25s' into seconds.

    Args:
        text (str or float): Duration; bare numbers are seconds

    Returns:
        float: Duration in seconds
    """
    if isinstance(text, (int, float)):
        seconds = float(text)
    else:
        match = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([a-z]*)\s*", str(text).lower())
        if not match or match.group(2) not in _DURATION_UNITS:
            raise ValueError(f"Invalid duration: {text!r}")
        seconds = float(match.group(1)) * _DURATION_UNITS[match.group(2)]
    if seconds <= 0:
        raise ValueError(f"Duration must be positive: {text!r}")
    return seconds


def mesh_label(seconds):
    """Human label for a mesh in seconds: 1s, 5s, 1min, 5min."""
    if seconds >= 60 and float(seconds / 60).is_integer():
        return f"{int(seconds // 60)}min"
    if float(seconds).is_integer():
        return f"{int(seconds)}s"
    return f"{seconds:g}s"


def get_current_timestamp():
    """Get the current timestamp in the format used in summaries."""
    return datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
