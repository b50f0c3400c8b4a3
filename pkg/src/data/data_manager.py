"""
Result files: per-row CSV tables, JSON summaries and simulated path dumps.
"""

import os
from pathlib import Path

from src.utils.config import FLOAT_FORMAT, config, get_logger, version_string
from src.utils.utils import get_current_timestamp, jsonable

logger = get_logger(__name__)


def _prepare(file_path):
    file_path = Path(file_path)
    os.makedirs(file_path.parent, exist_ok=True)
    return file_path


def save_table(frame, file_path, index=False):
    """Write a DataFrame as CSV with 9 significant digits; `.gz` names are gzipped."""
    file_path = _prepare(file_path)
    frame.to_csv(file_path, index=index, float_format=FLOAT_FORMAT, compression="infer")
    logger.info("Wrote %d rows to %s", len(frame), file_path)
    return file_path


def save_summary(summary, file_path, resolved_config=None):
    """
    Write a JSON summary, embedding the resolved run configuration and version.

    Returns:
        Path: the written file

    Raises:
        OSError: if the file cannot be written
    """
    payload = dict(summary)
    if resolved_config is not None:
        payload["config"] = resolved_config
    payload.setdefault("version", version_string())
    payload.setdefault("created", get_current_timestamp())
    file_path = _prepare(file_path)
    if not config.save_json_data(file_path, jsonable(payload)):
        raise OSError(f"could not write summary {file_path}")
    logger.info("Wrote summary to %s", file_path)
    return file_path


def save_path(sim_path, file_path):
    """Dump one simulated path as time, log_price, v, g2."""
    return save_table(sim_path.to_frame(), file_path)


def save_experiment(result, output_dir, resolved_config=None, stem="experiment"):
    """Per-path CSV plus JSON summary of a Monte Carlo experiment; returns both paths."""
    output_dir = Path(output_dir)
    records_file = save_table(result.records, output_dir / f"{stem}_paths.csv")
    summary_file = output_dir / f"{stem}_summary.json"
    save_summary(result.to_summary(), summary_file, resolved_config)
    return records_file, summary_file
