"""
Command-line entry point.

    python scripts/run_volvol.py estimate --input ticks.csv --output out/daily.csv
    python scripts/run_volvol.py mc --model heston --mesh 1s --paths 1000 --cM 0.05 --seed 42
    python scripts/run_volvol.py kernels-check

Every command accepts --config FILE (JSON); values given on the command line
win over the file, and the file wins over the built-in defaults. The resolved
settings are echoed into each JSON summary.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from src.core import empirics
from src.core.baselines import asj_estimator, vetter_estimator
from src.core.fourier_core import clock_to_horizon, kernel_identity_suite
from src.core.mc import ESTIMATORS, ExperimentSpec, qq_data, run_experiment, sensitivity_cM
from src.core.simulate import path_seed, simulate
from src.core.tuning import AdaptiveConfig, adaptive_cM, build_config
from src.core.volvol import estimate_series
from src.data import data_importer, data_manager
from src.utils.config import (
    DEFAULT_ADAPTIVE,
    DEFAULT_BETA,
    DEFAULT_CM,
    DEFAULT_IOTA,
    DEFAULT_LEVEL,
    DEFAULT_MAX_LAG,
    DEFAULT_PATHS,
    DEFAULT_SEED,
    MIN_DAY_OBSERVATIONS,
    OUTPUT_DIR,
    SIMULATED_DIR,
    TRADING_SECONDS_PER_DAY,
    Config,
    get_logger,
)
from src.utils.errors import ConfigError, VolvolError
from src.utils.utils import parse_duration

logger = get_logger(__name__)

DAILY_COLUMNS = ["date", "n_obs", "N", "M", "c_M", "integrated_volvol", "std_error", "ci_low",
                 "ci_high", "negative_flag", "integrated_vol", "daily_return"]

BASELINES = {"asj": asj_estimator, "vetter": vetter_estimator}

DEFAULTS = {
    "simulate": {"model": "heston", "mesh": "1s", "days": 1, "seed": DEFAULT_SEED, "substeps": 1,
                 "output_dir": str(SIMULATED_DIR), "dump_paths": False},
    "estimate": {"cM": None, "adaptive": False, "M": None, "N": None, "L": None,
                 "level": DEFAULT_LEVEL, "iota": DEFAULT_IOTA, "raw": False,
                 "min_obs": MIN_DAY_OBSERVATIONS, "format": "csv",
                 "baselines": None, "baseline_mesh": "1min", "beta": None,
                 "output": str(Config.get_file_path("daily")), **DEFAULT_ADAPTIVE},
    "mc": {"model": "heston", "paths": DEFAULT_PATHS, "mesh": "1s", "poisson": None,
           "estimators": "fourier_debiased", "cM": None, "M": None, "adaptive": False,
           "beta": None, "iota": DEFAULT_IOTA, "level": DEFAULT_LEVEL, "seed": DEFAULT_SEED,
           "workers": None, "qq": False, "output_dir": str(OUTPUT_DIR)},
    "sensitivity": {"model": "heston", "paths": 400, "grid": "0.03,0.04,0.05,0.06,0.07,0.08,0.09",
                    "meshes": "1s", "seed": DEFAULT_SEED, "workers": None,
                    "output": str(Config.get_file_path("sensitivity"))},
    "kernels-check": {"sizes": "1,8,16,32,64,128", "tol": 1e-6,
                      "output": str(Config.get_file_path("kernels"))},
    "empirics": {"max_lag": DEFAULT_MAX_LAG, "output_dir": str(OUTPUT_DIR / "empirics")},
}


def _float_list(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def resolve_config(args):
    """Defaults < config file < command-line flags; returns the resolved settings dict."""
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    merged = Config.merge_with_file(flags, args.config)
    resolved = dict(DEFAULTS[args.command])
    resolved.update({k: v for k, v in merged.items() if v is not None})
    resolved["command"] = args.command
    return resolved


# estimate

def estimate_day(day, settings):
    """Estimate one trading day; returns a row of the daily output."""
    series = data_importer.day_series(day)
    c_M = settings.get("cM")
    if settings.get("adaptive"):
        cfg = AdaptiveConfig(settings["c_M0"], settings["step"], settings["threshold"],
                             int(settings["max_iters"]))
        c_M = adaptive_cM(series, cfg).c_M
    elif settings.get("M") is None and c_M is None:
        c_M = DEFAULT_CM["heston"]
    config = build_config(series, c_M=c_M, M=settings.get("M"), N=settings.get("N"),
                          L=settings.get("L"), iota=settings.get("iota", DEFAULT_IOTA))
    estimate = estimate_series(series, config, debias=not settings.get("raw"),
                               level=settings.get("level", DEFAULT_LEVEL))
    horizon = series.horizon_T
    return {
        "n_obs": series.n_intervals + 1,
        "N": config.N,
        "M": config.M,
        "c_M": math.nan if c_M is None else c_M,
        "integrated_volvol": clock_to_horizon(estimate.integrated_volvol, horizon),
        "std_error": clock_to_horizon(2 * math.pi * estimate.std_error, horizon),
        "ci_low": clock_to_horizon(estimate.ci_low, horizon),
        "ci_high": clock_to_horizon(estimate.ci_high, horizon),
        "negative_flag": estimate.negative_flag,
        "integrated_vol": estimate.integrated_variance,
        "daily_return": data_importer.daily_return(day["price"]),
        **baseline_estimates(day, settings),
    }


def _baseline_names(settings):
    names = settings.get("baselines") or []
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    unknown = [n for n in names if n not in BASELINES]
    if unknown:
        raise ConfigError(f"unknown baseline(s) {unknown}; choose from {sorted(BASELINES)}")
    return list(names)


def baseline_estimates(day, settings):
    """Realized estimators on the previous-tick resampled day, NaN where they cannot run."""
    names = _baseline_names(settings)
    if not names:
        return {}
    mesh = parse_duration(settings.get("baseline_mesh") or "1min")
    beta = settings.get("beta") or DEFAULT_BETA["heston"]
    out = {}
    try:
        series = data_importer.regular_day_series(day, mesh)
    except VolvolError as e:
        logger.warning("Day cannot be resampled on a %gs mesh: %s", mesh, e)
        return {name: math.nan for name in names}
    for name in names:
        try:
            out[name] = BASELINES[name](series, beta)
        except VolvolError as e:
            logger.warning("%s estimate unavailable: %s", name, e)
            out[name] = math.nan
    return out


def estimate_daily(ticks, settings):
    """
    Estimate every day of a tick frame independently.

    Returns:
        tuple: (DataFrame of daily rows, list of (date, reason) for skipped days)
    """
    rows, skipped = [], []
    for date, day in data_importer.split_days(ticks, int(settings.get("min_obs",
                                                                       MIN_DAY_OBSERVATIONS))):
        try:
            row = estimate_day(day, settings)
        except VolvolError as e:
            logger.warning("Skipping %s: %s", date.date(), e)
            skipped.append((date.date().isoformat(), str(e)))
            continue
        rows.append({"date": date.date().isoformat(), **row})
    return pd.DataFrame(rows, columns=DAILY_COLUMNS + _baseline_names(settings)), skipped


def cmd_estimate(settings):
    if not settings.get("input"):
        raise ConfigError("estimate needs --input")
    if _baseline_names(settings):
        parse_duration(settings.get("baseline_mesh") or "1min")
    ticks = data_importer.read_tick_csv(settings["input"])
    daily, skipped = estimate_daily(ticks, settings)
    if daily.empty:
        raise ConfigError(
            f"no observations: no day has at least {settings['min_obs']} valid ticks")
    output = Path(settings["output"])
    summary = {"days_estimated": len(daily), "days_skipped": skipped}
    if settings["format"] == "json":
        summary["days"] = daily.to_dict(orient="records")
        data_manager.save_summary(summary, output.with_suffix(".json"), settings)
    else:
        data_manager.save_table(daily, output)
        data_manager.save_summary(summary, output.with_suffix(".summary.json"), settings)
    print(f"Estimated {len(daily)} day(s); skipped {len(skipped)}.")
    return 0


# simulate

def cmd_simulate(settings):
    mesh = parse_duration(settings["mesh"])
    n_steps = TRADING_SECONDS_PER_DAY / mesh
    if abs(n_steps - round(n_steps)) > 1e-9:
        raise ConfigError(f"mesh {mesh}s does not divide a {TRADING_SECONDS_PER_DAY}s day")
    output_dir = Path(settings["output_dir"])
    opens = pd.bdate_range("2020-01-02", periods=int(settings["days"])) + pd.Timedelta(hours=9, minutes=30)
    frames, truths = [], []
    for day_index, day_open in enumerate(opens):
        seed = path_seed(int(settings["seed"]), day_index)
        path = simulate(settings["model"], int(round(n_steps)), seed=seed,
                        substeps=int(settings["substeps"]))
        stamps = day_open + pd.to_timedelta(path.time_seconds, unit="s")
        frames.append(pd.DataFrame({"timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S.%f"),
                                    "price": np.exp(path.log_prices)}))
        truths.append({"date": day_open.date().isoformat(), "seed": seed,
                       "true_integrated_volvol": path.true_integrated_volvol,
                       "true_integrated_variance": path.true_integrated_variance})
        if settings.get("dump_paths"):
            data_manager.save_path(path, output_dir / f"path_{day_index:04d}.csv.gz")
    data_manager.save_table(pd.concat(frames, ignore_index=True), output_dir / "ticks.csv")
    data_manager.save_table(pd.DataFrame(truths), output_dir / "truth.csv")
    data_manager.save_summary({"days": truths}, output_dir / "simulate_summary.json", settings)
    print(f"Simulated {len(truths)} {settings['model']} day(s) into {output_dir}")
    return 0


# mc / sensitivity

def _experiment_spec(settings):
    poisson = settings.get("poisson")
    estimators = settings["estimators"]
    if isinstance(estimators, str):
        estimators = [e.strip() for e in estimators.split(",") if e.strip()]
    return ExperimentSpec(
        model=settings["model"],
        n_paths=int(settings["paths"]),
        sampling="poisson" if poisson else "regular",
        mesh=parse_duration(settings["mesh"]),
        mean_duration=parse_duration(poisson) if poisson else 2.0,
        estimators=tuple(estimators),
        c_M=settings.get("cM"),
        M=settings.get("M"),
        adaptive=bool(settings.get("adaptive")),
        beta=settings.get("beta"),
        iota=settings.get("iota", DEFAULT_IOTA),
        level=settings.get("level", DEFAULT_LEVEL),
        master_seed=int(settings["seed"]),
        output_dir=settings.get("output_dir"),
    )


def cmd_mc(settings):
    spec = _experiment_spec(settings)
    result = run_experiment(spec, workers=settings.get("workers"))
    output_dir = Path(settings["output_dir"])
    stem = f"{spec.model}_{spec.label}"
    data_manager.save_experiment(result, output_dir, settings, stem=stem)
    if settings.get("qq"):
        for estimator, sample in result.standardized_errors.items():
            if sample.size >= 100:
                data_manager.save_table(qq_data(sample), output_dir / f"{stem}_{estimator}_qq.csv")
            else:
                logger.warning("Only %d standardized errors for %s; q-q table not written",
                               sample.size, estimator)
    print(result.aggregates.to_string(float_format=lambda v: f"{v:.4g}"))
    return 0


def cmd_sensitivity(settings):
    meshes = [parse_duration(m) for m in str(settings["meshes"]).split(",") if m.strip()]
    spec = ExperimentSpec(model=settings["model"], n_paths=int(settings["paths"]),
                          mesh=min(meshes), master_seed=int(settings["seed"]))
    table = sensitivity_cM(spec, _float_list(settings["grid"]), meshes, settings.get("workers"))
    output = Path(settings["output"])
    data_manager.save_table(table, output)
    data_manager.save_summary({"rows": table.to_dict(orient="records")},
                              output.with_suffix(".summary.json"), settings)
    print(table.to_string(index=False))
    return 0


# kernels-check

def cmd_kernels_check(settings):
    sizes = [int(s) for s in _float_list(settings["sizes"])]
    report = kernel_identity_suite(sizes, tol=float(settings["tol"]))
    data_manager.save_table(report, settings["output"])
    print(report.to_string(index=False))
    failed = int((~report["passed"]).sum())
    if failed:
        print(f"{failed} of {len(report)} kernel checks FAILED")
        return 1
    print(f"All {len(report)} kernel checks passed")
    return 0


# empirics

def cmd_empirics(settings):
    if not settings.get("input"):
        raise ConfigError("empirics needs --input (daily estimate CSV)")
    columns = ["integrated_volvol", "integrated_vol", "daily_return"]
    daily = data_importer.read_daily_csv(settings["input"], columns)
    volvol = empirics.DailySeries.from_frame(daily, "integrated_volvol", label="vol. of vol.")
    vol = empirics.DailySeries.from_frame(daily, "integrated_vol", label="vol.")
    returns = empirics.DailySeries.from_frame(daily, "daily_return", label="return")

    output_dir = Path(settings["output_dir"])
    stats_table = pd.DataFrame([empirics.sample_stats(s) for s in (volvol, vol, returns)])
    data_manager.save_table(stats_table, output_dir / "sample_stats.csv")
    data_manager.save_table(empirics.yearly_correlations(volvol, vol, returns),
                            output_dir / "yearly_correlations.csv")
    max_lag = int(settings["max_lag"])
    for series, name in ((volvol, "volvol"), (vol, "vol")):
        lag = min(max_lag, math.ceil(len(series) / 4) - 1)
        if lag >= 1:
            data_manager.save_table(empirics.acf(series, lag), output_dir / f"acf_{name}.csv")
        else:
            logger.warning("Series %s too short for autocorrelations", name)
        if (series.values > 0).all():
            data_manager.save_table(empirics.lognormality_tests(series),
                                    output_dir / f"lognormality_{name}.csv")
        else:
            logger.warning("Series %s has non-positive values; log-normality tests skipped", name)
    data_manager.save_summary({"days": len(daily)}, output_dir / "empirics_summary.json", settings)
    print(stats_table.to_string(index=False))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "mc": cmd_mc,
    "sensitivity": cmd_sensitivity,
    "kernels-check": cmd_kernels_check,
    "empirics": cmd_empirics,
}


def build_parser():
    parser = argparse.ArgumentParser(description="Fourier vol-of-vol estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; command-line flags win")
        return p

    p = add("simulate", "Simulate tick days from the Heston or vol-of-vol model")
    p.add_argument("--model", choices=["heston", "svv"])
    p.add_argument("--mesh", help="Observation mesh, e.g. 1s or 5min")
    p.add_argument("--days", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--substeps", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--dump-paths", dest="dump_paths", action="store_true", default=None)

    p = add("estimate", "Estimate daily integrated vol-of-vol from a tick CSV")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--cM", type=float)
    p.add_argument("--adaptive", action="store_true", default=None)
    p.add_argument("--M", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--iota", type=float)
    p.add_argument("--raw", action="store_true", default=None,
                   help="Positive (non-debiased) estimator")
    p.add_argument("--min-obs", dest="min_obs", type=int)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--baselines", help="Comma list of realized estimators to add (asj,vetter)")
    p.add_argument("--baseline-mesh", dest="baseline_mesh",
                   help="Previous-tick mesh for the realized estimators, e.g. 1min")
    p.add_argument("--beta", type=float, help="Spot-variance window constant")

    p = add("mc", "Run a Monte Carlo experiment")
    p.add_argument("--model", choices=["heston", "svv"])
    p.add_argument("--paths", type=int)
    p.add_argument("--mesh")
    p.add_argument("--poisson", help="Mean duration for Poisson sampling, e.g. 2s")
    p.add_argument("--estimators", help=f"Comma list from {','.join(ESTIMATORS)}")
    p.add_argument("--cM", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--adaptive", action="store_true", default=None)
    p.add_argument("--beta", type=float)
    p.add_argument("--iota", type=float)
    p.add_argument("--level", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--qq", action="store_true", default=None)
    p.add_argument("--output-dir", dest="output_dir")

    p = add("sensitivity", "MSE over a c_M grid with common random numbers")
    p.add_argument("--model", choices=["heston", "svv"])
    p.add_argument("--paths", type=int)
    p.add_argument("--grid")
    p.add_argument("--meshes")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")

    p = add("kernels-check", "Check the Dirichlet and Fejér kernel identities")
    p.add_argument("--sizes")
    p.add_argument("--tol", type=float)
    p.add_argument("--output")

    p = add("empirics", "Stylized facts of a daily estimate CSV")
    p.add_argument("--input")
    p.add_argument("--max-lag", dest="max_lag", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        settings = resolve_config(args)
        return COMMANDS[args.command](settings)
    except (ValueError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
