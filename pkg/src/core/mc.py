"""
Monte Carlo harness for the vol-of-vol estimators.

Each path gets its own seed from (master_seed, path index). Paths are
simulated on a one-second grid and subsampled to the requested mesh, so
experiments that differ only in mesh, c_M or estimator see the same
trajectories. Records are sorted by path index before aggregation and every
sum uses math.fsum, which makes the aggregates independent of the number of
workers.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from src.core import baselines
from src.core.fourier_core import clock_to_horizon
from src.core.simulate import MODEL_PARAMS, path_seed, poisson_resample, simulate
from src.core.tuning import adaptive_cM, build_config, halve_M
from src.core.volvol import estimate_series
from src.utils.config import (
    DEFAULT_BETA,
    DEFAULT_CM,
    DEFAULT_FINE_MESH,
    DEFAULT_HORIZON,
    DEFAULT_IOTA,
    DEFAULT_LEVEL,
    DEFAULT_PATHS,
    DEFAULT_SEED,
    SECONDS_PER_YEAR,
    get_logger,
    get_worker_count,
    version_string,
)
from src.utils.errors import ConfigError, SampleSizeError, VolvolError
from src.utils.utils import get_current_timestamp, mesh_label

logger = get_logger(__name__)

ESTIMATORS = ("fourier_raw", "fourier_debiased", "asj", "vetter")
FOURIER_ESTIMATORS = ("fourier_raw", "fourier_debiased")
LADDER_MESHES = (300.0, 60.0, 30.0, 5.0, 1.0)
MIN_QQ_SAMPLE = 100

# Published 10^4-path results: (model, estimator, sampling label) -> (MSE, bias)
REFERENCE_RESULTS = {
    ("heston", "fourier_debiased", "5min"): (1.474e-8, -5.674e-6),
    ("heston", "fourier_debiased", "1min"): (4.425e-9, -4.142e-6),
    ("heston", "fourier_debiased", "30s"): (2.913e-9, -3.801e-6),
    ("heston", "fourier_debiased", "5s"): (9.985e-10, -2.932e-7),
    ("heston", "fourier_debiased", "1s"): (4.229e-10, -1.833e-7),
    ("svv", "fourier_debiased", "5min"): (3.886e-8, 1.455e-6),
    ("svv", "fourier_debiased", "1min"): (1.939e-8, 1.304e-6),
    ("svv", "fourier_debiased", "30s"): (1.327e-8, 1.269e-6),
    ("svv", "fourier_debiased", "5s"): (8.113e-9, 4.161e-7),
    ("svv", "fourier_debiased", "1s"): (6.199e-9, 3.644e-7),
    ("heston", "fourier_debiased", "poisson_2s"): (6.888e-10, -1.910e-7),
    ("heston", "fourier_debiased", "poisson_1.5s"): (5.250e-10, -1.888e-7),
    ("heston", "fourier_debiased", "poisson_1.25s"): (4.662e-10, -1.865e-7),
    ("svv", "fourier_debiased", "poisson_2s"): (9.672e-9, 3.840e-7),
    ("svv", "fourier_debiased", "poisson_1.5s"): (7.564e-9, 3.776e-7),
    ("svv", "fourier_debiased", "poisson_1.25s"): (6.696e-9, 3.730e-7),
    ("heston", "asj", "1min"): (1.800e-3, 1.473e-2),
    ("heston", "asj", "30s"): (5.364e-4, 1.388e-2),
    ("heston", "asj", "5s"): (3.733e-4, 1.047e-2),
    ("heston", "asj", "1s"): (3.322e-4, 9.838e-3),
    ("svv", "asj", "1min"): (1.655e-3, 1.299e-2),
    ("svv", "asj", "30s"): (4.114e-4, 1.119e-2),
    ("svv", "asj", "5s"): (3.390e-4, 1.001e-2),
    ("svv", "asj", "1s"): (2.999e-4, 9.555e-3),
    ("heston", "vetter", "1min"): (1.501e-3, 1.575e-2),
    ("heston", "vetter", "30s"): (5.461e-4, 1.456e-2),
    ("heston", "vetter", "5s"): (3.783e-4, 1.091e-2),
    ("heston", "vetter", "1s"): (3.324e-4, 9.840e-3),
    ("svv", "vetter", "1min"): (1.377e-3, 1.303e-2),
    ("svv", "vetter", "30s"): (4.336e-4, 1.122e-2),
    ("svv", "vetter", "5s"): (3.302e-4, 9.998e-3),
    ("svv", "vetter", "1s"): (3.002e-4, 9.555e-3),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """What to simulate, how to observe it and which estimators to run."""

    model: str = "heston"
    n_paths: int = DEFAULT_PATHS
    sampling: str = "regular"
    mesh: float = 1.0
    mean_duration: float = 2.0
    estimators: tuple = ("fourier_debiased",)
    c_M: float = None
    M: int = None
    adaptive: bool = False
    beta: float = None
    iota: float = DEFAULT_IOTA
    level: float = DEFAULT_LEVEL
    master_seed: int = DEFAULT_SEED
    horizon: float = DEFAULT_HORIZON
    substeps: int = 1
    fine_mesh: float = DEFAULT_FINE_MESH
    params: dict = None
    output_dir: str = None

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.model not in MODEL_PARAMS:
            raise ConfigError(f"unknown model: {self.model}")
        if self.n_paths < 1:
            raise ConfigError(f"n_paths must be at least 1, got {self.n_paths}")
        if self.sampling not in ("regular", "poisson"):
            raise ConfigError(f"sampling must be 'regular' or 'poisson', got {self.sampling}")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if not self.estimators or unknown:
            raise ConfigError(f"estimators must be a nonempty subset of {ESTIMATORS}")
        if self.sampling == "poisson" and set(self.estimators) - set(FOURIER_ESTIMATORS):
            raise ConfigError("realized baselines need regular sampling")
        if not (self.mesh > 0 and self.mean_duration > 0 and self.fine_mesh > 0):
            raise ConfigError("mesh, mean_duration and fine_mesh must be positive")
        if self.c_M is not None and not self.c_M > 0:
            raise ConfigError(f"c_M must be positive, got {self.c_M}")
        if self.sampling == "regular" and self.mesh > self.horizon_seconds / 6:
            raise ConfigError(f"mesh {self.mesh}s leaves fewer than 6 intervals")
        self.simulation_steps()

    @property
    def resolved_c_M(self):
        return DEFAULT_CM[self.model] if self.c_M is None else self.c_M

    @property
    def resolved_beta(self):
        return DEFAULT_BETA[self.model] if self.beta is None else self.beta

    @property
    def horizon_seconds(self):
        return self.horizon * SECONDS_PER_YEAR

    @property
    def simulation_mesh(self):
        if self.sampling == "poisson":
            return self.fine_mesh
        return 1.0 if float(self.mesh).is_integer() else self.mesh

    @property
    def label(self):
        if self.sampling == "poisson":
            return f"poisson_{self.mean_duration:g}s"
        return mesh_label(self.mesh)

    def simulation_steps(self):
        """Number of simulation intervals and the subsampling step for the mesh."""
        steps = self.horizon_seconds / self.simulation_mesh
        if abs(steps - round(steps)) > 1e-6 * steps:
            raise ConfigError(
                f"simulation mesh {self.simulation_mesh}s does not divide the horizon")
        stride = 1
        if self.sampling == "regular":
            stride = self.mesh / self.simulation_mesh
            if abs(stride - round(stride)) > 1e-9 or round(steps) % round(stride):
                raise ConfigError(f"mesh {self.mesh}s does not divide the horizon")
        return int(round(steps)), int(round(stride))

    def to_dict(self):
        out = asdict(self)
        out.update(c_M=self.resolved_c_M, beta=self.resolved_beta, label=self.label)
        return out


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: pd.DataFrame
    aggregates: pd.DataFrame
    standardized_errors: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def failures(self):
        return int(self.records["failed"].sum()) if len(self.records) else 0

    def reference(self):
        """Published results for this configuration, keyed by estimator."""
        found = {}
        for estimator in self.spec.estimators:
            key = (self.spec.model, estimator, self.spec.label)
            if key in REFERENCE_RESULTS:
                mse, bias = REFERENCE_RESULTS[key]
                found[estimator] = {"mse": mse, "bias": bias}
        return found

    def to_summary(self):
        return {
            "spec": self.spec.to_dict(),
            "aggregates": self.aggregates.reset_index().to_dict(orient="records"),
            "reference": self.reference(),
            "failures": self.failures,
            "metadata": self.metadata,
        }


def _simulate_path(spec, index):
    seed = path_seed(spec.master_seed, index)
    n_steps, _ = spec.simulation_steps()
    params = MODEL_PARAMS[spec.model](**spec.params) if spec.params else None
    return simulate(spec.model, n_steps, spec.horizon, seed, spec.substeps, params)


def _observe(spec, path, index):
    if spec.sampling == "poisson":
        arrival_seed = path_seed(spec.master_seed + 1, index)
        return poisson_resample(path, spec.mean_duration, arrival_seed)
    _, stride = spec.simulation_steps()
    return path.subsample(stride)


def _regular_M_star(spec):
    # M on the one-second grid, the reference choice for Poisson days
    return max(2, math.floor(spec.resolved_c_M / math.sqrt(spec.horizon / spec.horizon_seconds)))


def fourier_config(spec, series):
    """Resolve the estimator configuration for one observed path; returns (config, c_M)."""
    if spec.M is not None:
        return build_config(series, M=spec.M, iota=spec.iota), math.nan
    if spec.sampling == "poisson":
        return build_config(series, M=halve_M(_regular_M_star(spec)), iota=spec.iota), math.nan
    c_M = adaptive_cM(series).c_M if spec.adaptive else spec.resolved_c_M
    return build_config(series, c_M=c_M, iota=spec.iota), c_M


def _base_record(index, path, estimator, series):
    return {
        "path": index,
        "seed": path.seed,
        "estimator": estimator,
        "n_obs": series.n_intervals + 1,
        "true_value": path.true_integrated_volvol,
        "estimate": math.nan,
        "error": math.nan,
        "std_error": math.nan,
        "standardized_error": math.nan,
        "ci_low": math.nan,
        "ci_high": math.nan,
        "covered": math.nan,
        "negative_flag": False,
        "N": math.nan,
        "M": math.nan,
        "L": math.nan,
        "c_M": math.nan,
        "failed": False,
        "reason": "",
    }


def _fourier_record(record, spec, series, debias):
    config, c_M = fourier_config(spec, series)
    estimate = estimate_series(series, config, debias=debias, level=spec.level)
    horizon = series.horizon_T
    value = clock_to_horizon(estimate.integrated_volvol, horizon)
    se = clock_to_horizon(2 * math.pi * estimate.std_error, horizon)
    record.update(estimate=value, std_error=se, negative_flag=estimate.negative_flag,
                  N=config.N, M=config.M, L=config.L, c_M=c_M)
    if estimate.variance_available:
        low = clock_to_horizon(estimate.ci_low, horizon)
        high = clock_to_horizon(estimate.ci_high, horizon)
        record.update(ci_low=low, ci_high=high,
                      covered=float(low <= record["true_value"] <= high))
        if se > 0:
            record["standardized_error"] = (value - record["true_value"]) / se


def evaluate_path(spec, index):
    """Simulate path `index` and apply every requested estimator; returns a list of records."""
    path = _simulate_path(spec, index)
    try:
        series = _observe(spec, path, index)
    except VolvolError as exc:
        logger.warning("Path %d could not be observed: %s", index, exc)
        failed = []
        for estimator in spec.estimators:
            record = _base_record(index, path, estimator, path.series)
            record.update(failed=True, reason=str(exc), n_obs=0)
            failed.append(record)
        return failed
    records = []
    for estimator in spec.estimators:
        record = _base_record(index, path, estimator, series)
        try:
            if estimator in FOURIER_ESTIMATORS:
                _fourier_record(record, spec, series, debias=estimator == "fourier_debiased")
            elif estimator == "asj":
                record["estimate"] = baselines.asj_estimator(series, spec.resolved_beta)
            else:
                record["estimate"] = baselines.vetter_estimator(series, spec.resolved_beta)
            record["error"] = record["estimate"] - record["true_value"]
        except VolvolError as exc:
            logger.warning("Path %d, %s failed: %s", index, estimator, exc)
            record.update(failed=True, reason=str(exc), estimate=math.nan)
        records.append(record)
    return records


def _map_paths(func, n_paths, workers, desc):
    workers = workers or get_worker_count()
    if workers <= 1:
        return [func(i) for i in tqdm(range(n_paths), desc=desc, disable=None)]
    chunksize = max(1, n_paths // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(tqdm(executor.map(func, range(n_paths), chunksize=chunksize),
                         total=n_paths, desc=desc, disable=None))


def _aggregate_one(rows):
    errors = rows["error"].to_numpy()
    n = errors.size
    bias = math.fsum(errors) / n
    mse = math.fsum(errors * errors) / n
    variance = math.fsum((errors - bias) ** 2) / n
    covered = rows["covered"].dropna().to_numpy()
    standardized = rows["standardized_error"].dropna().to_numpy()
    ks_pvalue = stats.kstest(standardized, "norm").pvalue if standardized.size >= 2 else math.nan
    large = bool(abs(bias) > 1 or mse > 1)
    return {
        "n_paths": n,
        "mean_true": math.fsum(rows["true_value"]) / n,
        "mean_estimate": math.fsum(rows["estimate"]) / n,
        "bias": bias,
        "mse": mse,
        "variance": variance,
        "bias_se": math.sqrt(variance / (n - 1)) if n > 1 else math.nan,
        "coverage": math.fsum(covered) / covered.size if covered.size else math.nan,
        "negative_rate": math.fsum(rows["negative_flag"].astype(float)) / n,
        "ks_pvalue": ks_pvalue,
        "large_error": large,
    }


def aggregate(records, estimators):
    """Per-estimator bias, MSE and companions over the non-failed paths."""
    rows = []
    for estimator in estimators:
        subset = records[records["estimator"] == estimator]
        ok = subset[~subset["failed"]].sort_values("path")
        failures = int(subset["failed"].sum())
        if ok.empty:
            row = {"n_paths": 0}
        else:
            row = _aggregate_one(ok)
        row.update(estimator=estimator, failures=failures)
        if row.get("large_error"):
            logger.warning("%s errors exceed 1 in absolute value", estimator)
        rows.append(row)
    return pd.DataFrame(rows).set_index("estimator")


def run_experiment(spec, workers=None):
    """
    Simulate spec.n_paths paths and evaluate the requested estimators.

    Args:
        spec (ExperimentSpec): Experiment definition
        workers (int, optional): Worker processes (default: VOLVOL_WORKERS)

    Returns:
        ExperimentResult: Per-path records, aggregates, standardized errors, metadata
    """
    started = time.perf_counter()
    logger.info("Running %s experiment: %d paths, %s sampling (%s)", spec.model, spec.n_paths,
                spec.sampling, spec.label)
    batches = _map_paths(partial(evaluate_path, spec), spec.n_paths, workers, spec.label)
    records = pd.DataFrame([r for batch in batches for r in batch])
    order = {name: i for i, name in enumerate(spec.estimators)}
    records = (records.assign(_order=records["estimator"].map(order))
               .sort_values(["path", "_order"]).drop(columns="_order").reset_index(drop=True))
    aggregates = aggregate(records, spec.estimators)

    standardized = {}
    for estimator in spec.estimators:
        if estimator in FOURIER_ESTIMATORS:
            mask = (records["estimator"] == estimator) & ~records["failed"]
            standardized[estimator] = records.loc[mask, "standardized_error"].dropna().to_numpy()

    failures = int(records["failed"].sum())
    if failures:
        logger.warning("%d estimator evaluations failed and were excluded", failures)
    metadata = {
        "version": version_string(),
        "created": get_current_timestamp(),
        "wall_time_seconds": time.perf_counter() - started,
        "master_seed": spec.master_seed,
        "workers": workers or get_worker_count(),
    }
    logger.info("Experiment finished in %.1fs", metadata["wall_time_seconds"])
    return ExperimentResult(spec, records, aggregates, standardized, metadata)


def _sensitivity_strides(spec, meshes):
    """Subsampling stride of each mesh on the grid the experiment simulates."""
    n_steps, _ = spec.simulation_steps()
    base = spec.simulation_mesh
    strides = {}
    for mesh in meshes:
        ratio = mesh / base
        stride = int(round(ratio))
        if stride < 1 or abs(ratio - stride) > 1e-9 or n_steps % stride:
            raise ConfigError(f"mesh {mesh:g}s is not a multiple of the {base:g}s simulation "
                              f"mesh dividing the horizon")
        strides[mesh] = stride
    return strides


def _sensitivity_path(spec, c_M_grid, strides, index):
    path = _simulate_path(spec, index)
    rows = []
    for mesh, stride in strides.items():
        series = path.subsample(stride)
        for c_M in c_M_grid:
            try:
                config = build_config(series, c_M=c_M, iota=spec.iota)
                estimate = estimate_series(series, config, debias=True, level=spec.level)
                error = clock_to_horizon(estimate.integrated_volvol, series.horizon_T) \
                    - path.true_integrated_volvol
                rows.append((index, c_M, mesh, config.M, error, False))
            except VolvolError as exc:
                logger.warning("Path %d, c_M=%g, mesh=%gs failed: %s", index, c_M, mesh, exc)
                rows.append((index, c_M, mesh, math.nan, math.nan, True))
    return rows


def sensitivity_cM(spec, c_M_grid, meshes=None, workers=None):
    """
    MSE of the bias-corrected estimator over a c_M grid, one row per (c_M, mesh).

    All grid points and meshes share the same simulated paths.
    """
    grid = [float(c) for c in c_M_grid]
    if not grid or any(not 0.01 <= c <= 1 for c in grid):
        raise ConfigError("c_M grid values must lie in [0.01, 1]")
    if spec.sampling != "regular":
        raise ConfigError("c_M sensitivity runs on regular sampling")
    meshes = [float(m) for m in (meshes or [spec.mesh])]
    strides = _sensitivity_strides(spec, meshes)

    func = partial(_sensitivity_path, spec, grid, strides)
    batches = _map_paths(func, spec.n_paths, workers, "sensitivity")
    frame = pd.DataFrame([r for batch in batches for r in batch],
                         columns=["path", "c_M", "mesh", "M", "error", "failed"])
    rows = []
    for (mesh, c_M), group in frame.groupby(["mesh", "c_M"], sort=False):
        ok = group[~group["failed"]].sort_values("path")
        errors = ok["error"].to_numpy()
        n = errors.size
        rows.append({
            "c_M": c_M,
            "mesh": mesh,
            "M": int(ok["M"].iloc[0]) if n else -1,
            "mse": math.fsum(errors * errors) / n if n else math.nan,
            "bias": math.fsum(errors) / n if n else math.nan,
            "n_paths": n,
            "failures": int(group["failed"].sum()),
        })
    table = pd.DataFrame(rows).sort_values(["mesh", "c_M"], ascending=[False, True])
    return table.reset_index(drop=True)


def mesh_ladder(spec, meshes=LADDER_MESHES, workers=None):
    """Run the same seeded experiment at each mesh; one aggregate row per (mesh, estimator)."""
    frames = []
    for mesh in meshes:
        result = run_experiment(replace(spec, sampling="regular", mesh=float(mesh)), workers)
        frame = result.aggregates.reset_index()
        frame.insert(0, "mesh", float(mesh))
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def qq_data(standardized_errors):
    """
    Standard-normal quantiles against sorted sample quantiles.

    Plotting positions are (i - 0.5)/n. A constant sample is flagged through
    ``table.attrs["degenerate"]``.
    """
    sample = np.sort(np.asarray(standardized_errors, dtype=float))
    n = sample.size
    if n < MIN_QQ_SAMPLE:
        raise SampleSizeError(f"q-q data needs at least {MIN_QQ_SAMPLE} values, got {n}")
    positions = (np.arange(1, n + 1) - 0.5) / n
    table = pd.DataFrame({"theoretical_quantile": stats.norm.ppf(positions),
                          "empirical_quantile": sample})
    degenerate = bool(sample[0] == sample[-1])
    table.attrs["degenerate"] = degenerate
    if degenerate:
        logger.warning("Standardized errors are constant; q-q table is degenerate")
    return table
