"""
Trace Module

Per-generation trace records, the in-memory run trace, and the sinks that
stream traces as newline-delimited JSON.

A trace file starts with one header record followed by one record per
generation; game records are interleaved before their generation record
when game recording is enabled. Generation records carry, in order: gen,
lumped_state, mean_hamming, ne_games, games, mean_Q, q_m2, player_mean_q,
mean_price, population_hash, identical_plays.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
import pandas as pd

from src.utils.errors import TraceError

logger = logging.getLogger(__name__)


@dataclass
class GameRecord:
    """One played game: chosen chromosome index per player and its payoffs."""

    generation: int
    period: int
    choices: List[int]
    quantities: List[float]
    price: float
    profits: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "game",
            "gen": self.generation,
            "period": self.period,
            "choices": self.choices,
            "quantities": self.quantities,
            "price": self.price,
            "profits": self.profits,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GameRecord":
        return cls(
            generation=data["gen"], period=data["period"], choices=data["choices"],
            quantities=data["quantities"], price=data["price"], profits=data["profits"],
        )


@dataclass
class GenerationTrace:
    """
    Summary of one generation, taken right after the population update.

    mean_q is the mean over this generation's games of the per-game average
    quantity; q_m2 is the sum of squared deviations of those per-game
    averages from mean_q. identical_plays counts, per chromosome value, the
    games in which every player played that chromosome.
    """

    generation: int
    lumped_state: int
    mean_hamming: float
    ne_games: int
    games: int
    mean_q: float
    q_m2: float
    player_mean_q: List[float]
    mean_price: float
    population_hash: str
    identical_plays: Dict[int, int] = field(default_factory=dict)
    game_records: Optional[List[GameRecord]] = None
    populations: Optional[List[List[str]]] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "type": "generation",
            "gen": self.generation,
            "lumped_state": self.lumped_state,
            "mean_hamming": self.mean_hamming,
            "ne_games": self.ne_games,
            "games": self.games,
            "mean_Q": self.mean_q,
            "q_m2": self.q_m2,
            "player_mean_q": self.player_mean_q,
            "mean_price": self.mean_price,
            "population_hash": self.population_hash,
            "identical_plays": {str(k): v for k, v in sorted(self.identical_plays.items())},
        }
        if self.populations is not None:
            data["populations"] = self.populations
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GenerationTrace":
        return cls(
            generation=data["gen"],
            lumped_state=data["lumped_state"],
            mean_hamming=data["mean_hamming"],
            ne_games=data["ne_games"],
            games=data["games"],
            mean_q=data["mean_Q"],
            q_m2=data["q_m2"],
            player_mean_q=list(data["player_mean_q"]),
            mean_price=data["mean_price"],
            population_hash=data["population_hash"],
            identical_plays={int(k): v for k, v in data.get("identical_plays", {}).items()},
            populations=data.get("populations"),
        )


@dataclass
class RunTrace:
    """
    Everything recorded for one run: the header plus T generation records.

    initial_state is the lumped state of the initial populations
    (generation 0).
    """

    header: Dict[str, Any]
    generations: List[GenerationTrace] = field(default_factory=list)

    @property
    def params(self) -> Dict[str, Any]:
        return self.header["params"]

    @property
    def n(self) -> int:
        return self.header["n"]

    @property
    def q_hat(self) -> float:
        return self.header["q_hat"]

    @property
    def initial_state(self) -> int:
        return self.header["initial_state"]

    @property
    def init_mode(self) -> str:
        return self.params["init"]

    @property
    def lumped_states(self) -> np.ndarray:
        """Lumped state after each generation's update, generations 1..T."""
        return np.array([g.lumped_state for g in self.generations], dtype=int)

    @property
    def state_series(self) -> np.ndarray:
        """Lumped states indexed by generation, including generation 0."""
        return np.concatenate([[self.initial_state], self.lumped_states]).astype(int)

    @property
    def total_games(self) -> int:
        return sum(g.games for g in self.generations)

    def game_records(self) -> List[GameRecord]:
        records = []
        for g in self.generations:
            records.extend(g.game_records or [])
        return records

    def to_frame(self):
        """Per-generation time series as a pandas DataFrame."""
        rows = []
        for g in self.generations:
            row = {
                "gen": g.generation,
                "lumped_state": g.lumped_state,
                "mean_hamming": g.mean_hamming,
                "ne_games": g.ne_games,
                "games": g.games,
                "mean_Q": g.mean_q,
                "mean_price": g.mean_price,
            }
            for i, q in enumerate(g.player_mean_q):
                row[f"q_{i + 1}"] = q
            rows.append(row)
        return pd.DataFrame(rows)


class MemorySink:
    """Keeps the trace in memory."""

    def __init__(self):
        self.trace: Optional[RunTrace] = None

    def write_header(self, header: Dict[str, Any]) -> None:
        self.trace = RunTrace(header=header)

    def write_generation(self, record: GenerationTrace) -> None:
        self.trace.generations.append(record)

    def close(self) -> None:
        pass


class JsonlTraceWriter(MemorySink):
    """
    Streams the trace to a newline-delimited JSON file while also keeping it
    in memory for analysis.

    Args:
        path: Trace file path
        keep_in_memory: Also build the in-memory RunTrace
    """

    def __init__(self, path: str, keep_in_memory: bool = True):
        super().__init__()
        self.path = path
        self.keep_in_memory = keep_in_memory
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self._file = open(path, "w", encoding="utf-8")

    def _write(self, data: Dict[str, Any], generation: Optional[int]) -> None:
        try:
            self._file.write(json.dumps(data, sort_keys=True) + "\n")
        except OSError as e:
            raise TraceError(f"Cannot write trace {self.path}: {e}", generation=generation) from e

    def write_header(self, header: Dict[str, Any]) -> None:
        self._write(dict(header, type="header"), generation=0)
        super().write_header(header)

    def write_generation(self, record: GenerationTrace) -> None:
        for game in record.game_records or []:
            self._write(game.to_dict(), generation=record.generation)
        self._write(record.to_dict(), generation=record.generation)
        if self.keep_in_memory:
            super().write_generation(record)

    def close(self) -> None:
        self._file.close()
        logger.debug(f"Closed trace {self.path}")


def iter_trace_records(path: str) -> Iterator[Dict[str, Any]]:
    """Yield the raw JSON records of a trace file."""
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise TraceError(f"{path}:{line_number}: malformed record ({e})") from e


def read_trace(path: str) -> RunTrace:
    """
    Load a trace file written by JsonlTraceWriter.

    Args:
        path: Trace file path

    Returns:
        RunTrace with game records attached to their generations
    """
    trace: Optional[RunTrace] = None
    pending_games: List[GameRecord] = []
    for record in iter_trace_records(path):
        kind = record.get("type")
        if kind == "header":
            header = dict(record)
            header.pop("type")
            trace = RunTrace(header=header)
        elif trace is None:
            raise TraceError(f"{path}: trace does not start with a header record")
        elif kind == "game":
            pending_games.append(GameRecord.from_dict(record))
        elif kind == "generation":
            generation = GenerationTrace.from_dict(record)
            if pending_games:
                generation.game_records = pending_games
                pending_games = []
            trace.generations.append(generation)
        else:
            raise TraceError(f"{path}: unknown record type {kind!r}")
    if trace is None:
        raise TraceError(f"{path}: empty trace")
    logger.info(f"Loaded trace {path} with {len(trace.generations)} generations")
    return trace
