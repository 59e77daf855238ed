"""
Experiment Module

This module expands experiment configurations into grids of runs, executes
the runs (optionally in a process pool) and condenses every grid point into
a batch report.

Each run streams its trace to the store, then writes a statistics record.
A failing run is logged and recorded in the report; the batch continues.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.analysis.markov import chain_stats
from src.analysis.statistics import (
    DEFAULT_ALPHA,
    RunQuantityStats,
    RunSample,
    TestVerdict,
    batch_verdicts,
    quantity_stats,
    within_run_player_tests,
)
from src.market.models import MarketModel, symmetric_nash
from src.memory.trace_store import TraceStore
from src.simulation.engine import RNG_DESCRIPTION, run_simulation
from src.simulation.params import AlgorithmKind, InitMode, SimulationParams, model_from_dict
from src.simulation.trace import read_trace
from src.utils.errors import ConfigurationError, ModelParameterError
from src.utils.seeding import derive_seed

# Configure logging
logger = logging.getLogger(__name__)

GRID_KEYS = ("K", "p_mut", "T", "ga_rate")
DEFAULT_SEEDS = 30


def _as_list(value: Any) -> List[Any]:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _as_float(value: Any, key: str) -> float:
    if isinstance(value, bool):
        raise ConfigurationError(f"'{key}' must be a number, got {value}", key=key)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{key}' must be a number, got {value!r}", key=key) from None


@dataclass
class ExperimentConfig:
    """
    One experiment: a model, an algorithm and grids over K, p_mut, T and
    GArate, each grid point run for `seeds` replicates.

    Scalars given for grid keys are treated as one-point grids. ga_rate is
    ignored by the co-evolutionary algorithms.
    """

    model: str = "poly4"
    kind: str = "VS"
    K: List[int] = field(default_factory=lambda: [40])
    p_mut: List[float] = field(default_factory=lambda: [0.00025])
    T: List[int] = field(default_factory=lambda: [10000])
    ga_rate: List[int] = field(default_factory=lambda: [50])
    p_cross: float = 1.0
    L: Optional[int] = None
    base_seed: int = 0
    seeds: int = DEFAULT_SEEDS
    init: str = "random"
    custom_model: Optional[Dict[str, Any]] = None
    output_dir: Optional[str] = None
    label: Optional[str] = None
    burn_in: int = 0
    alpha: float = DEFAULT_ALPHA
    record_games: bool = False
    store_populations: bool = False
    timeseries: bool = True
    workers: Optional[int] = None
    verbose: bool = False

    def __post_init__(self):
        for key in GRID_KEYS:
            values = _as_list(getattr(self, key))
            if not values:
                raise ConfigurationError(f"Grid '{key}' is empty", key=key)
            setattr(self, key, values)
        # YAML reads exponent floats without a dot (1e-3) as strings.
        self.p_mut = [_as_float(p, "p_mut") for p in self.p_mut]
        self.p_cross = _as_float(self.p_cross, "p_cross")
        self.alpha = _as_float(self.alpha, "alpha")

        try:
            self.kind = AlgorithmKind(self.kind).value
        except ValueError:
            raise ConfigurationError(
                f"Unknown algorithm '{self.kind}'; expected one of {[k.value for k in AlgorithmKind]}", key="kind"
            ) from None
        try:
            self.init = InitMode(self.init).value
        except ValueError:
            raise ConfigurationError(
                f"Unknown init mode '{self.init}'; expected one of {[m.value for m in InitMode]}", key="init"
            ) from None

        if not isinstance(self.seeds, int) or self.seeds < 1:
            raise ConfigurationError(f"Seed count must be a positive integer, got {self.seeds}", key="seeds")
        if not isinstance(self.base_seed, int):
            raise ConfigurationError(f"Base seed must be an integer, got {self.base_seed}", key="base_seed")
        for p in self.p_mut:
            if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"Mutation probability must lie in [0, 1], got {p}", key="p_mut")
        for key in ("K", "T", "ga_rate"):
            for v in getattr(self, key):
                if not isinstance(v, int) or v < 1:
                    raise ConfigurationError(f"'{key}' values must be positive integers, got {v}", key=key)
        if self.burn_in < 0:
            raise ConfigurationError(f"Burn-in must be non-negative, got {self.burn_in}", key="burn_in")
        if self.workers is not None and self.workers < 1:
            raise ConfigurationError(f"Worker count must be positive, got {self.workers}", key="workers")

        # Every grid point must be a valid run.
        self.expand()

    @property
    def is_social(self) -> bool:
        return AlgorithmKind(self.kind).is_social

    def model_id(self) -> str:
        return self.custom_model.get("name", "custom") if self.custom_model else self.model

    def _custom_market(self) -> Optional[MarketModel]:
        """Build the custom model once and make sure it has a symmetric equilibrium."""
        if not self.custom_model:
            return None
        try:
            model = model_from_dict(self.custom_model)
            symmetric_nash(model)
        except (ConfigurationError, ModelParameterError) as e:
            raise ConfigurationError(f"custom model: {e}", key="custom_model") from None
        return model

    def _grid(self) -> List[Dict[str, Any]]:
        ga_rates = self.ga_rate if AlgorithmKind(self.kind).is_vriend else [None]
        return [
            {"K": K, "p_mut": p_mut, "T": T, "ga_rate": ga_rate}
            for K, p_mut, T, ga_rate in product(self.K, self.p_mut, self.T, ga_rates)
        ]

    def expand(self) -> List["GridPoint"]:
        """
        Expand the grids into runs.

        Returns:
            One GridPoint per grid combination, in K, p_mut, T, GArate order

        Raises:
            ConfigurationError: A grid point is not a valid run
        """
        custom = self._custom_market()
        points = []
        for index, point in enumerate(self._grid()):
            label = self.grid_label(point)
            runs = []
            for replicate in range(self.seeds):
                try:
                    params = SimulationParams(
                        model_id=self.model_id(),
                        kind=self.kind,
                        K=point["K"],
                        p_mut=point["p_mut"],
                        T=point["T"],
                        seed=derive_seed(self.base_seed, index, replicate),
                        L=self.L,
                        p_cross=self.p_cross,
                        ga_rate=point["ga_rate"],
                        init=self.init,
                        custom_model=custom,
                        store_populations=self.store_populations,
                        record_games=self.record_games,
                    )
                except ConfigurationError as e:
                    raise type(e)(f"grid point {label}: {e.detail}", key=e.key) from None
                runs.append(params)
            points.append(GridPoint(index=index, label=label, runs=runs))
        return points

    def grid_label(self, point: Dict[str, Any]) -> str:
        parts = [self.label or self.model_id(), self.kind, f"K{point['K']}", f"pm{point['p_mut']:g}", f"T{point['T']}"]
        if point["ga_rate"] is not None:
            parts.append(f"gr{point['ga_rate']}")
        return "_".join(parts)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"Unknown config keys {unknown}", key=unknown[0])
        return cls(**data)


@dataclass
class GridPoint:
    index: int
    label: str
    runs: List[SimulationParams]


@dataclass
class RunTask:
    """Everything a worker process needs to execute one run."""

    label: str
    params: Dict[str, Any]
    output_dir: str
    burn_in: int = 0
    alpha: float = DEFAULT_ALPHA
    timeseries: bool = True


def stats_record(trace, burn_in: int = 0, alpha: float = DEFAULT_ALPHA) -> Dict[str, Any]:
    """Statistics record of one run as stored next to its trace."""
    params = SimulationParams.from_dict(trace.params)
    player_tests = within_run_player_tests(trace, trace.q_hat, alpha) if len(trace.generations) > 1 else []
    return {
        "seed": params.seed,
        "params": params.to_dict(),
        "q_hat": trace.q_hat,
        "initial_state": trace.initial_state,
        "rng": trace.header.get("rng", RNG_DESCRIPTION),
        "chain": chain_stats(trace, burn_in=burn_in).to_dict(),
        "quantity": quantity_stats(trace, trace.n).to_dict(),
        "player_tests": [v.to_dict() for v in player_tests],
    }


def execute_run(task: RunTask) -> Dict[str, Any]:
    """
    Execute one run and persist its trace and statistics.

    Exceptions are caught, logged and returned as an error record; the
    trace of a failed run is removed so re-analysis sees complete runs only.

    Returns:
        Result record: seed, stats record, optional time series, or error
    """
    params = SimulationParams.from_dict(task.params)
    store = TraceStore(task.output_dir)
    sink = None
    try:
        sink = store.open_trace(task.label, params.seed)
        trace = run_simulation(params, sink=sink)
        record = stats_record(trace, task.burn_in, task.alpha)
        store.write_stats(task.label, params.seed, record)
        result = {"seed": params.seed, "stats": record}
        if task.timeseries:
            result["timeseries"] = trace.to_frame().to_dict(orient="list")
        return result
    except Exception as e:
        logger.error(f"Run {task.label} seed={params.seed} failed: {str(e)}", exc_info=True)
        if sink is not None:
            sink.close()
        store.discard_trace(task.label, params.seed)
        return {"seed": params.seed, "error": f"{type(e).__name__}: {e}"}


@dataclass
class BatchReport:
    """Per-run statistics and aggregates of one grid point."""

    label: str
    params: Dict[str, Any]
    q_hat: Optional[float]
    runs: List[Dict[str, Any]]
    failures: List[Dict[str, Any]]
    aggregates: Dict[str, Any]
    verdicts: Optional[Dict[str, Any]]
    rng: str = RNG_DESCRIPTION

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _mean_or_none(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def aggregate_runs(records: List[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Aggregate statistics over the successful runs of a batch.

    Generations-to-NE statistics use uncensored runs only; interarrival times
    are pooled over all runs.
    """
    records = sorted(records, key=lambda r: r["seed"])
    count = len(records)
    if count == 0:
        return {"runs": 0}
    chains = [r["chain"] for r in records]
    reached = [c["gen_to_ne"] for c in chains if c["gen_to_ne"] is not None]
    interarrival = [t for c in chains for t in c["interarrival"]]
    counts = np.sum([c["counts"] for c in chains], axis=0)

    return {
        "runs": count,
        "reached_ne": len(reached),
        "censoring_rate": (count - len(reached)) / count,
        "mean_gen_to_ne": _mean_or_none(reached),
        "median_gen_to_ne": float(np.median(reached)) if reached else None,
        "mean_interarrival": _mean_or_none(interarrival),
        "pooled_freq": (counts / counts.sum()).tolist(),
        "mean_ne_game_fraction": float(np.mean([c["ne_game_fraction"] for c in chains])),
        "mean_ne_game_fraction_after_first_visit": _mean_or_none(
            [c["ne_game_fraction_after_first_visit"] for c in chains if c["gen_to_ne"] is not None]
        ),
        "mean_expected_hamming": float(np.mean([c["expected_hamming"] for c in chains])),
        "mean_hamming": float(np.mean([c["mean_hamming"] for c in chains])),
        "mean_grand_mean_Q": float(np.mean([r["quantity"]["grand_mean_Q"] for r in records])),
        "max_player_spread": float(max(
            np.ptp(r["quantity"]["per_player_means"]) for r in records
        )),
    }


def build_report(point: GridPoint, results: List[Dict[str, Any]], alpha: float = DEFAULT_ALPHA) -> BatchReport:
    """Assemble the batch report of a grid point from its run results."""
    results = sorted(results, key=lambda r: r["seed"])
    records = [r["stats"] for r in results if "stats" in r]
    failures = [{"seed": r["seed"], "error": r["error"]} for r in results if "error" in r]
    q_hat = records[0]["q_hat"] if records else None

    verdicts = None
    if records:
        samples = [
            RunSample(
                params=r["params"],
                quantity=RunQuantityStats.from_dict(r["quantity"]),
                player_tests=[TestVerdict(**v) for v in r["player_tests"]],
            )
            for r in records
        ]
        verdicts = batch_verdicts(samples, q_hat, alpha).to_dict()

    params = point.runs[0].batch_key()
    return BatchReport(
        label=point.label,
        params=params,
        q_hat=q_hat,
        runs=records,
        failures=failures,
        aggregates=aggregate_runs(records),
        verdicts=verdicts,
    )


class BatchRunner:
    """
    Executes every run of an experiment and writes one report per grid point.
    """

    def __init__(self, config: ExperimentConfig, store: TraceStore, workers: Optional[int] = None, progress: bool = True):
        """
        Initialize the batch runner.

        Args:
            config: Experiment configuration
            store: Artifact store
            workers: Process count; defaults to the config, then to the CPU count
            progress: Show a tqdm progress bar
        """
        self.config = config
        self.store = store
        self.workers = workers or config.workers or os.cpu_count() or 1
        self.progress = progress
        logger.info(f"Initialized batch runner with {self.workers} workers")

    def _tasks(self, points: List[GridPoint]) -> List[RunTask]:
        return [
            RunTask(
                label=point.label,
                params=params.to_dict(),
                output_dir=self.store.output_dir,
                burn_in=self.config.burn_in,
                alpha=self.config.alpha,
                timeseries=self.config.timeseries,
            )
            for point in points
            for params in point.runs
        ]

    def _execute(self, tasks: List[RunTask]) -> List[Dict[str, Any]]:
        bar = tqdm(total=len(tasks), desc="runs", unit="run", disable=not self.progress)
        results = []
        if self.workers == 1 or len(tasks) == 1:
            for task in tasks:
                results.append(dict(execute_run(task), label=task.label))
                bar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                futures = {executor.submit(execute_run, task): task for task in tasks}
                for future in as_completed(futures):
                    results.append(dict(future.result(), label=futures[future].label))
                    bar.update(1)
        bar.close()
        return results

    def run(self) -> List[BatchReport]:
        """
        Run all grid points.

        Returns:
            One BatchReport per grid point, in expansion order
        """
        points = self.config.expand()
        tasks = self._tasks(points)
        logger.info(f"Running {len(points)} grid points with {self.config.seeds} seeds each ({len(tasks)} runs)")
        results = self._execute(tasks)

        reports = []
        for point in points:
            point_results = [r for r in results if r["label"] == point.label]
            for r in point_results:
                r.pop("label")
            report = build_report(point, point_results, self.config.alpha)
            self.store.write_report(point.label, report.to_dict())
            if self.config.timeseries:
                frames = {r["seed"]: pd.DataFrame(r["timeseries"]) for r in point_results if "timeseries" in r}
                self.store.write_timeseries(point.label, frames)
            if report.failures:
                logger.warning(f"{point.label}: {len(report.failures)} of {len(point.runs)} runs failed")
            reports.append(report)
        return reports


def analyze_directory(store: TraceStore, label: str, burn_in: int = 0, alpha: float = DEFAULT_ALPHA) -> BatchReport:
    """
    Rebuild a batch report from the trace files of a grid point.

    Args:
        store: Artifact store holding the traces
        label: Grid point label
        burn_in: Generations discarded before counting frequencies
        alpha: Test size

    Returns:
        BatchReport (also written to the store)
    """
    paths = store.trace_files(label)
    if not paths:
        raise ConfigurationError(f"No trace files under {store.grid_dir(label)}")
    results, runs = [], []
    for path in paths:
        trace = read_trace(path)
        runs.append(SimulationParams.from_dict(trace.params))
        record = stats_record(trace, burn_in, alpha)
        results.append({"seed": record["seed"], "stats": record})
    report = build_report(GridPoint(index=0, label=label, runs=runs), results, alpha)
    store.write_report(label, report.to_dict())
    return report
