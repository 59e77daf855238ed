"""
Markov Analysis Module

Classifies population states into the L+1 lumped states by their average
Hamming distance to the Nash chromosome and estimates the chain statistics:
limiting frequencies, hitting time of the Nash state, return times and the
share of games played at the equilibrium.

Analysis functions accept either a RunTrace or a plain sequence of lumped
states (generation 0 first).
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.encoding.chromosome import Chromosome, PopulationsLike, hamming_to, stack_members
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

NASH_STATE = 0


@dataclass
class ChainStats:
    """Lumped-chain statistics of one run. gen_to_ne is None when censored at T."""

    freq: List[float]
    counts: List[int]
    gen_to_ne: Optional[int]
    interarrival: List[int] = field(default_factory=list)
    ne_game_fraction: float = 0.0
    ne_game_fraction_after_first_visit: float = 0.0
    expected_hamming: float = 0.0
    mean_hamming: float = 0.0

    @property
    def censored(self) -> bool:
        return self.gen_to_ne is None

    @property
    def mean_interarrival(self) -> Optional[float]:
        return float(np.mean(self.interarrival)) if self.interarrival else None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["censored"] = self.censored
        data["mean_interarrival"] = self.mean_interarrival
        return data


def lumped_state_for_distance(d_bar: float) -> int:
    """S_0 iff d_bar == 0, otherwise the i with i-1 < d_bar <= i."""
    if d_bar < 0:
        raise ConfigurationError(f"Average distance cannot be negative, got {d_bar}")
    return NASH_STATE if d_bar == 0 else int(math.ceil(d_bar))


def lumped_state_of(populations: PopulationsLike, nash: Chromosome) -> int:
    """
    Lumped state of a set of populations.

    The average distance is kept as an exact integer ratio so that values
    on the interval boundaries classify correctly.

    Args:
        populations: All players' populations
        nash: The Nash chromosome

    Returns:
        Lumped state index in 0..L
    """
    members = stack_members(populations)
    total = int(hamming_to(members, nash).sum())
    count = members.shape[0]
    return NASH_STATE if total == 0 else -(-total // count)


def _is_trace(trace: Any) -> bool:
    return hasattr(trace, "generations") and hasattr(trace, "header")


def _generation_states(trace: Any) -> np.ndarray:
    if _is_trace(trace):
        return trace.lumped_states
    return np.asarray(trace, dtype=int)


def lumped_state_series(trace: Any) -> np.ndarray:
    """Lumped state per generation including generation 0."""
    if _is_trace(trace):
        return trace.state_series
    return np.asarray(trace, dtype=int)


def hamming_mean_series(trace: Any) -> np.ndarray:
    """Average Hamming distance to the Nash chromosome after each generation."""
    generations = trace.generations if _is_trace(trace) else list(trace)
    return np.array([g.mean_hamming for g in generations], dtype=float)


def lumped_state_counts(trace: Any, L: Optional[int] = None, burn_in: int = 0) -> np.ndarray:
    """Visit counts N_i per lumped state after the burn-in prefix."""
    states = _generation_states(trace)
    if L is None:
        L = trace.header["L"] if _is_trace(trace) else int(states.max(initial=0))
    if burn_in < 0 or burn_in >= len(states):
        raise ConfigurationError(f"Burn-in {burn_in} must be smaller than the trace length {len(states)}")
    return np.bincount(states[burn_in:], minlength=L + 1)


def limiting_frequencies(trace: Any, L: Optional[int] = None, burn_in: int = 0) -> np.ndarray:
    """
    Estimate the limiting frequency of each lumped state as N_i / N.

    For a RunTrace the post-update states of generations 1..T are counted.

    Args:
        trace: RunTrace or sequence of lumped states
        L: Chromosome length (read from the trace header when omitted)
        burn_in: Number of leading generations to discard

    Returns:
        Array of L+1 frequencies

    Raises:
        ConfigurationError: burn_in >= number of generations
    """
    counts = lumped_state_counts(trace, L=L, burn_in=burn_in)
    return counts / counts.sum()


def expected_hamming_distance(freq: Sequence[float]) -> float:
    """Mean lumped-state index under the estimated limiting frequencies."""
    freq = np.asarray(freq, dtype=float)
    return float(np.dot(np.arange(freq.size), freq))


def generations_to_ne(trace: Any) -> Optional[int]:
    """
    Generation index of the first visit to the Nash state.

    Args:
        trace: RunTrace (ideally from an anti-Nash start) or state sequence

    Returns:
        The generation index, or None when the Nash state is never reached
    """
    if _is_trace(trace) and trace.init_mode != "anti_nash":
        logger.info(f"Hitting time measured on a run with init '{trace.init_mode}' instead of 'anti_nash'")
    visits = np.flatnonzero(lumped_state_series(trace) == NASH_STATE)
    return int(visits[0]) if visits.size else None


def interarrival_times(trace: Any) -> List[int]:
    """Gaps, in generations, between consecutive visits to the Nash state."""
    visits = np.flatnonzero(lumped_state_series(trace) == NASH_STATE)
    return np.diff(visits).astype(int).tolist()


def ne_game_fraction(trace: Any, after_first_visit: bool = False) -> float:
    """
    Share of games in which every player played the Nash chromosome.

    Args:
        trace: RunTrace or iterable of GenerationTrace
        after_first_visit: Count only generations after the first Nash-state visit

    Returns:
        Fraction in [0, 1]; 0 when no games qualify
    """
    generations = trace.generations if _is_trace(trace) else list(trace)
    if after_first_visit:
        if _is_trace(trace):
            visits = np.flatnonzero(trace.state_series == NASH_STATE)
            first = int(visits[0]) if visits.size else None
        else:
            first = next((g.generation for g in generations if g.lumped_state == NASH_STATE), None)
        if first is None:
            return 0.0
        generations = [g for g in generations if g.generation > first]
    games = sum(g.games for g in generations)
    if games == 0:
        return 0.0
    return sum(g.ne_games for g in generations) / games


def chain_stats(trace: Any, burn_in: int = 0) -> ChainStats:
    """
    Bundle the lumped-chain statistics of one run.

    Args:
        trace: RunTrace
        burn_in: Generations discarded before counting frequencies

    Returns:
        ChainStats
    """
    counts = lumped_state_counts(trace, burn_in=burn_in)
    freq = counts / counts.sum()
    return ChainStats(
        freq=freq.tolist(),
        counts=counts.astype(int).tolist(),
        gen_to_ne=generations_to_ne(trace),
        interarrival=interarrival_times(trace),
        ne_game_fraction=ne_game_fraction(trace),
        ne_game_fraction_after_first_visit=ne_game_fraction(trace, after_first_visit=True),
        expected_hamming=expected_hamming_distance(freq),
        mean_hamming=float(hamming_mean_series(trace)[burn_in:].mean()),
    )
