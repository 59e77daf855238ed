"""
CLI Interface Module

This module provides the `cournot-ga` command group: single runs, parameter
sweeps, equilibrium reports, discovery of candidate equilibria, replication
of the published tables and re-analysis of stored traces.

Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 replication check failure.
"""

import logging
import os
from typing import List, Optional, Sequence

import click
from rich.console import Console
from rich.markup import escape

from src.analysis.markov import chain_stats
from src.analysis.statistics import quantity_stats
from src.encoding.chromosome import QuantityCodec, nash_chromosome
from src.harness.discover import discover
from src.harness.experiment import BatchRunner, ExperimentConfig, analyze_directory
from src.harness.replicate import DEFAULT_SCALE, TABLES, replicate
from src.interface.report import ReportRenderer
from src.market.models import (
    MODEL_CATALOGUE,
    build_model,
    default_bits,
    get_model,
    symmetric_nash,
    validate_theorem1,
    walrasian_quantity,
)
from src.memory.trace_store import TraceStore, write_json
from src.simulation.trace import read_trace
from src.utils.config import ConfigManager
from src.utils.errors import ConfigurationError, ModelParameterError, ReplicationCheckError

# Configure logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_REPLICATION = 3

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

console = Console()
renderer = ReportRenderer(console)


def setup_logging(log_file: Optional[str], verbose: bool) -> None:
    """Configure the root logger with a file and a stream handler."""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.insert(0, logging.FileHandler(log_file))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def experiment_options(func):
    """Options shared by the commands that run experiments."""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML experiment config"),
        click.option("--model", help="Catalogue model id"),
        click.option("--kind", type=click.Choice(["VI", "VS", "CP", "CS"]), help="Learning algorithm"),
        click.option("--pop", "K", type=int, multiple=True, help="Population size (repeatable)"),
        click.option("--p-mut", type=float, multiple=True, help="Mutation probability (repeatable)"),
        click.option("--generations", "T", type=int, multiple=True, help="Generations (repeatable)"),
        click.option("--ga-rate", type=int, multiple=True, help="Periods between updates (repeatable)"),
        click.option("--seeds", type=int, help="Seeds per grid point"),
        click.option("--seed", "base_seed", type=int, help="Base seed"),
        click.option("--init", type=click.Choice(["random", "anti_nash", "nash"]), help="Initial populations"),
        click.option("--output", "output_dir", type=click.Path(file_okay=False), help="Output directory"),
        click.option("--workers", type=int, help="Worker processes"),
        click.option("--set", "overrides", multiple=True, help="Override any config key: key=value"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _option_overrides(values: dict) -> List[str]:
    overrides = []
    for key, value in values.items():
        if value is None or value == ():
            continue
        if isinstance(value, tuple):
            value = list(value)
        overrides.append(f"{key}={value}")
    return overrides


def load_experiment(config_path: Optional[str], overrides: Sequence[str], defaults: Sequence[str] = (), **options) -> ExperimentConfig:
    """
    Build the experiment config: defaults, then the file, then options, then --set.
    """
    manager = ConfigManager()
    combined = list(_option_overrides(options)) + list(overrides)
    if config_path:
        return manager.load(config_path, combined)
    return manager.from_overrides(list(defaults) + combined)


def _run_batches(config: ExperimentConfig) -> None:
    store = TraceStore(config.output_dir)
    reports = BatchRunner(config, store).run()
    for report in reports:
        renderer.render_batch(report.to_dict())
    console.print(f"Artifacts written to {store.output_dir}")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level")
@click.option("--log-file", default="cournot_ga.log", show_default=True, help="Log file")
def cli(verbose: bool, log_file: str):
    """Co-evolutionary GA learning in symmetric Cournot oligopolies."""
    setup_logging(log_file, verbose)


@cli.command()
@experiment_options
def run(config_path, overrides, **options):
    """Run one configuration for a batch of seeds."""
    config = load_experiment(config_path, overrides, defaults=["seeds=1"], **options)
    points = config.expand()
    if len(points) != 1:
        raise ConfigurationError(f"'run' takes a single grid point, the config expands to {len(points)}; use 'sweep'")
    _run_batches(config)


@cli.command()
@experiment_options
def sweep(config_path, overrides, **options):
    """Run every point of a parameter grid."""
    config = load_experiment(config_path, overrides, **options)
    logger.info(f"Sweep over {len(config.expand())} grid points")
    _run_batches(config)


@cli.command()
@click.argument("model_id", required=False)
@click.option("--demand", type=click.Choice(["linear", "polynomial", "radical"]), help="Custom demand kind")
@click.option("--a", type=float, help="Custom demand parameter a")
@click.option("--b", type=float, help="Custom demand parameter b")
@click.option("--x", type=float, help="Custom marginal cost")
@click.option("--y", type=float, default=0.0, help="Custom fixed cost")
@click.option("--n", "players", type=int, help="Custom number of players")
@click.option("--bits", "L", type=int, help="Chromosome length")
def nash(model_id, demand, a, b, x, players, y, L):
    """Solve and print the symmetric Nash equilibrium of a model."""
    if model_id:
        model = get_model(model_id)
    elif None not in (demand, a, b, x, players):
        model = build_model(demand, a, b, x, y, players)
    else:
        raise ConfigurationError(
            f"Give a model id ({', '.join(sorted(MODEL_CATALOGUE))}) or --demand, --a, --b, --x and --n"
        )
    solution = symmetric_nash(model)
    codec = QuantityCodec.for_nash(solution.q_hat, L or default_bits(model))
    try:
        walrasian = walrasian_quantity(model)
    except ModelParameterError:
        walrasian = None
    checks = validate_theorem1(model, codec.q_max)
    renderer.render_nash(model, solution, codec, nash_chromosome(codec).to_string(), checks, walrasian)


@cli.command(name="discover")
@experiment_options
@click.option("--top", default=20, show_default=True, help="Candidates to verify")
def discover_command(config_path, overrides, top, **options):
    """Look for equilibria among games where all players chose the same quantity."""
    config = load_experiment(config_path, overrides, defaults=["seeds=1"], **options)
    point = config.expand()[0]
    params = point.runs[0]
    store = TraceStore(config.output_dir)
    report = discover(params, max_candidates=top, sink=store.open_trace(point.label, params.seed, keep_in_memory=True))
    path = os.path.join(store.grid_dir(point.label), "discovery.json")
    write_json(path, report.to_dict())
    renderer.render_discovery(report.to_dict())
    if not report.candidates:
        console.print("Discovery finished without identical-play games.")
    console.print(f"Discovery report written to {path}")


@cli.command(name="replicate")
@click.argument("table", type=click.Choice(TABLES))
@click.option("--scale", default=DEFAULT_SCALE, show_default=True, help="Seeds per batch row")
@click.option("--t-scale", default=1.0, show_default=True, help="Factor applied to generation counts")
@click.option("--seed", "base_seed", default=0, show_default=True, help="Base seed")
@click.option("--rows", multiple=True, help="Only rows whose label contains this text")
@click.option("--workers", type=int, help="Worker processes")
@click.option("--output", "output_dir", type=click.Path(file_okay=False), help="Output directory")
def replicate_command(table, scale, t_scale, base_seed, rows, workers, output_dir):
    """Reproduce a published table and check it against loose bounds."""
    store = TraceStore(output_dir or ConfigManager().default_output_dir())
    report = replicate(table, store, scale=scale, t_scale=t_scale, base_seed=base_seed, workers=workers, rows=list(rows))
    data = report.to_dict()
    path = os.path.join(store.output_dir, f"{table}_replication.json")
    write_json(path, data)
    renderer.render_replication(data)
    if not report.passed:
        raise ReplicationCheckError(f"{table}: replication checks failed, see {path}")


@cli.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--burn-in", default=0, show_default=True, help="Generations discarded before counting frequencies")
@click.option("--alpha", default=0.05, show_default=True, help="Test size")
def analyze(path, burn_in, alpha):
    """Re-analyze a trace file, a grid directory or a whole output directory."""
    if os.path.isfile(path):
        trace = read_trace(path)
        renderer.render_run(
            os.path.basename(path), chain_stats(trace, burn_in=burn_in), quantity_stats(trace, trace.n), trace.q_hat
        )
        return

    path = os.path.normpath(path)
    if os.path.isdir(os.path.join(path, "traces")):
        store, labels = TraceStore(os.path.dirname(path) or "."), [os.path.basename(path)]
    else:
        store = TraceStore(path)
        labels = store.labels()
    if not labels:
        raise ConfigurationError(f"No traces found under {path}")
    for label in labels:
        report = analyze_directory(store, label, burn_in=burn_in, alpha=alpha)
        renderer.render_batch(report.to_dict())


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command group and map failures to exit codes.

    Returns:
        Process exit code
    """
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="cournot-ga", standalone_mode=False)
    except click.exceptions.Abort:
        console.print("Aborted.")
        return EXIT_RUNTIME
    except click.ClickException as e:
        e.show()
        return EXIT_CONFIG
    except ConfigurationError as e:
        logger.error(f"Configuration error: {str(e)}")
        console.print(f"[red]Configuration error:[/red] {escape(str(e))}")
        return EXIT_CONFIG
    except ReplicationCheckError as e:
        logger.error(str(e))
        console.print(f"[red]{escape(str(e))}[/red]")
        return EXIT_REPLICATION
    except Exception as e:
        logger.error(f"Error during execution: {str(e)}", exc_info=True)
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        return EXIT_RUNTIME
    return EXIT_OK
