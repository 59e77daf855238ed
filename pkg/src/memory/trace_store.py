"""
Trace Store Module

This module owns the on-disk layout of experiment artifacts:

    <output_dir>/<grid-label>/traces/seed_<seed>.jsonl
    <output_dir>/<grid-label>/stats/seed_<seed>.json
    <output_dir>/<grid-label>/report.json
    <output_dir>/<grid-label>/timeseries.csv

JSON documents are written with sorted keys and no timestamps so that the
same configuration and seed reproduce byte-identical files.
"""

import glob
import json
import logging
import os
import re
from typing import Any, Dict, List, Optional

import pandas as pd

from src.simulation.trace import JsonlTraceWriter, RunTrace, read_trace
from src.utils.errors import TraceError

# Configure logging
logger = logging.getLogger(__name__)

SEED_PATTERN = re.compile(r"seed_(\d+)\.jsonl?$")


def write_json(path: str, data: Any) -> None:
    """Write a JSON document in the store's canonical form."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


class TraceStore:
    """
    Artifact store for traces, per-run statistics and batch reports.
    """

    def __init__(self, output_dir: str):
        """
        Initialize the trace store.

        Args:
            output_dir: Root directory of all experiment artifacts
        """
        self.output_dir = output_dir
        os.makedirs(self.output_dir, exist_ok=True)
        logger.info(f"Initialized trace store at {output_dir}")

    def grid_dir(self, label: str) -> str:
        return os.path.join(self.output_dir, label)

    def trace_path(self, label: str, seed: int) -> str:
        return os.path.join(self.grid_dir(label), "traces", f"seed_{seed}.jsonl")

    def stats_path(self, label: str, seed: int) -> str:
        return os.path.join(self.grid_dir(label), "stats", f"seed_{seed}.json")

    def report_path(self, label: str) -> str:
        return os.path.join(self.grid_dir(label), "report.json")

    def timeseries_path(self, label: str) -> str:
        return os.path.join(self.grid_dir(label), "timeseries.csv")

    def open_trace(self, label: str, seed: int, keep_in_memory: bool = True) -> JsonlTraceWriter:
        """Trace writer for one run."""
        return JsonlTraceWriter(self.trace_path(label, seed), keep_in_memory=keep_in_memory)

    def discard_trace(self, label: str, seed: int) -> bool:
        """Remove the trace of a failed run. Returns True when a file was removed."""
        path = self.trace_path(label, seed)
        if not os.path.exists(path):
            return False
        os.remove(path)
        logger.info(f"Discarded incomplete trace {path}")
        return True

    def write_stats(self, label: str, seed: int, record: Dict[str, Any]) -> str:
        """
        Save the statistics record of one run.

        Args:
            label: Grid point label
            seed: Run seed
            record: JSON-serializable statistics

        Returns:
            Path of the written file
        """
        path = self.stats_path(label, seed)
        write_json(path, record)
        logger.debug(f"Saved run statistics to {path}")
        return path

    def write_report(self, label: str, report: Dict[str, Any]) -> str:
        path = self.report_path(label)
        write_json(path, report)
        logger.info(f"Saved batch report to {path}")
        return path

    def read_report(self, label: str) -> Dict[str, Any]:
        path = self.report_path(label)
        if not os.path.exists(path):
            raise TraceError(f"No report found at {path}")
        return read_json(path)

    def write_timeseries(self, label: str, frames: Dict[int, pd.DataFrame]) -> Optional[str]:
        """
        Save the per-generation time series of every run as one CSV.

        Args:
            label: Grid point label
            frames: Time-series frame per seed

        Returns:
            Path of the CSV, or None when there is nothing to write
        """
        if not frames:
            return None
        combined = pd.concat(
            [frame.assign(seed=seed) for seed, frame in sorted(frames.items())],
            ignore_index=True,
        )
        columns = ["seed"] + [c for c in combined.columns if c != "seed"]
        path = self.timeseries_path(label)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        combined[columns].to_csv(path, index=False)
        logger.info(f"Saved time series of {len(frames)} runs to {path}")
        return path

    def labels(self) -> List[str]:
        """Grid points that have a traces directory."""
        return sorted(
            name for name in os.listdir(self.output_dir)
            if os.path.isdir(os.path.join(self.output_dir, name, "traces"))
        )

    def trace_files(self, label: str) -> List[str]:
        """Trace files of a grid point ordered by seed."""
        paths = glob.glob(os.path.join(self.grid_dir(label), "traces", "seed_*.jsonl"))
        return sorted(paths, key=seed_of)

    def load_trace(self, label: str, seed: int) -> RunTrace:
        return read_trace(self.trace_path(label, seed))


def seed_of(path: str) -> int:
    """Seed encoded in a trace or stats file name."""
    match = SEED_PATTERN.search(os.path.basename(path))
    if not match:
        raise TraceError(f"Cannot read a seed from file name {path}")
    return int(match.group(1))
