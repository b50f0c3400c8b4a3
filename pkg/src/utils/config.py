#!/usr/bin/env python3
"""
Configuration module for the vol-of-vol toolkit.
This module centralizes paths, numerical defaults and logging setup.
"""

import os
import json
import logging
import subprocess
from pathlib import Path

# Base directories
BASE_DIR = Path(__file__).parent.parent.parent
DATA_DIR = BASE_DIR / "data"
OUTPUT_DIR = BASE_DIR / "output"
SIMULATED_DIR = DATA_DIR / "simulated"
TEMP_DIR = BASE_DIR / "temp_uploads"

# Result files written by the command line and the dashboard
DAILY_ESTIMATES_FILE = OUTPUT_DIR / "daily_estimates.csv"
SENSITIVITY_FILE = OUTPUT_DIR / "sensitivity.csv"
KERNEL_REPORT_FILE = OUTPUT_DIR / "kernel_report.csv"

# Trading calendar: 252 days of 6.5 hours
TRADING_DAYS_PER_YEAR = 252
TRADING_SECONDS_PER_DAY = 23400
SECONDS_PER_YEAR = TRADING_DAYS_PER_YEAR * TRADING_SECONDS_PER_DAY
DEFAULT_HORIZON = 1.0 / TRADING_DAYS_PER_YEAR

# Estimator defaults
DEFAULT_CM = {"heston": 0.05, "svv": 0.07}
DEFAULT_BETA = {"heston": 0.04, "svv": 0.06}
DEFAULT_IOTA = 0.3
DEFAULT_LEVEL = 0.95
REALITY_TOL = 1e-10

# Adaptive c_M search (initial value, grid step, stopping threshold, iteration guard)
DEFAULT_ADAPTIVE = {"c_M0": 0.03, "step": 0.01, "threshold": 0.25, "max_iters": 50}

# Ingestion and empirics
MIN_DAY_OBSERVATIONS = 20
MIN_YEAR_OBSERVATIONS = 30
DEFAULT_MAX_LAG = 50

# Monte Carlo
DEFAULT_PATHS = 1000
DEFAULT_SEED = 42
DEFAULT_FINE_MESH = 0.25  # seconds, simulation grid for Poisson sampling

# Float formatting for every CSV/JSON output
FLOAT_FORMAT = "%.9g"

# Versioning
APP_TITLE = "Vol-of-Vol Estimation Toolkit"
APP_VERSION = "0.3.0"


class Config:
    """Configuration class for the toolkit."""

    @staticmethod
    def get_file_path(file_key):
        """
        Get the path for a specific output file by key.

        Args:
            file_key (str): Key for the file path ('daily', 'sensitivity', 'kernels')

        Returns:
            Path: Path object for the requested file
        """
        file_map = {
            'daily': DAILY_ESTIMATES_FILE,
            'sensitivity': SENSITIVITY_FILE,
            'kernels': KERNEL_REPORT_FILE,
        }

        if file_key not in file_map:
            raise ValueError(f"Invalid file key: {file_key}")

        return file_map[file_key]

    @staticmethod
    def save_json_data(file_path, data):
        """
        Save data to a JSON file.

        Args:
            file_path (str or Path): Path to the JSON file
            data (dict): Data to save

        Returns:
            bool: True if successful, False otherwise
        """
        file_path = Path(file_path)
        os.makedirs(file_path.parent, exist_ok=True)

        try:
            with open(file_path, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=2)
            return True
        except (OSError, TypeError) as e:
            get_logger(__name__).error("Error saving JSON to %s: %s", file_path, e)
            return False

    @staticmethod
    def merge_with_file(flags, file_path=None):
        """
        Merge command-line flags with a JSON config file. Flags win.

        Args:
            flags (dict): Parsed flags; None means "not given on the command line"
            file_path (str or Path, optional): JSON config file

        Returns:
            dict: Merged settings
        """
        merged = {}
        if file_path:
            file_path = Path(file_path)
            if not file_path.exists():
                raise FileNotFoundError(f"Config file not found: {file_path}")
            with open(file_path, 'r', encoding='utf-8') as f:
                merged.update(json.load(f))
        merged.update({k: v for k, v in flags.items() if v is not None})
        return merged


# Environment-specific configuration
def get_env_config():
    """
    Get configuration based on the current environment.

    Returns:
        dict: Environment-specific configuration
    """
    env = os.environ.get('ENV', 'development')

    config = {
        'development': {
            'debug': True,
            'log_level': 'INFO',
        },
        'production': {
            'debug': False,
            'log_level': 'WARNING',
        },
        'testing': {
            'debug': True,
            'log_level': 'DEBUG',
            'testing': True
        }
    }

    selected = dict(config.get(env, config['development']))
    if os.environ.get('LOG_LEVEL'):
        selected['log_level'] = os.environ['LOG_LEVEL'].upper()
    return selected


def get_worker_count():
    """Number of Monte Carlo worker processes, from VOLVOL_WORKERS (default 1)."""
    raw = os.environ.get('VOLVOL_WORKERS', '1')
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


_LOGGING_READY = False


def get_logger(name):
    """Return a module logger, configuring the root handler on first use."""
    global _LOGGING_READY
    if not _LOGGING_READY:
        logging.basicConfig(
            level=getattr(logging, ENV_CONFIG['log_level'], logging.INFO),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        _LOGGING_READY = True
    return logging.getLogger(name)


def version_string():
    """git-describe style version, falling back to APP_VERSION outside a checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=BASE_DIR, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{APP_VERSION}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return APP_VERSION


# Get active environment configuration
ENV_CONFIG = get_env_config()

# Export global config instance
config = Config()
