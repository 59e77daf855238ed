"""
Discovery Module

Searches for an unknown symmetric equilibrium: run a social-learning
simulation, collect the quantities of every game in which all players chose
the same quantity, rank them by frequency and confirm each candidate with a
best-response check.
"""

import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from src.encoding.chromosome import Chromosome, QuantityCodec
from src.market.models import verify_nash_candidate
from src.simulation.engine import RunContext, run_simulation
from src.simulation.params import SimulationParams

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class Candidate:
    value: int
    chromosome: str
    quantity: float
    games: int
    share: float
    confirmed: bool


@dataclass
class DiscoveryReport:
    params: Dict[str, Any]
    q_hat: float
    tolerance: float
    identical_games: int
    total_games: int
    candidates: List[Candidate] = field(default_factory=list)
    note: Optional[str] = None

    @property
    def confirmed(self) -> List[Candidate]:
        return [c for c in self.candidates if c.confirmed]

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["confirmed"] = [asdict(c) for c in self.confirmed]
        return data


def rank_candidates(tally: Counter, codec: QuantityCodec, model, tolerance: float, max_candidates: Optional[int] = None) -> List[Candidate]:
    """
    Rank identical-play values by frequency (ties by value) and verify them.

    Args:
        tally: Games per chromosome value in which every player used that value
        codec: Quantity codec of the run
        model: Market model
        tolerance: Accepted distance between a candidate and its best response
        max_candidates: Verify only the most frequent ones

    Returns:
        Candidate list, most frequent first
    """
    total = sum(tally.values())
    ranked = sorted(tally.items(), key=lambda item: (-item[1], item[0]))
    if max_candidates is not None:
        ranked = ranked[:max_candidates]
    candidates = []
    for value, games in ranked:
        quantity = float(codec.decode_value(value))
        candidates.append(Candidate(
            value=int(value),
            chromosome=Chromosome.from_value(int(value), codec.L).to_string(),
            quantity=quantity,
            games=int(games),
            share=games / total,
            confirmed=verify_nash_candidate(model, quantity, tol=tolerance),
        ))
    return candidates


def discover(params: SimulationParams, max_candidates: Optional[int] = 20, sink=None) -> DiscoveryReport:
    """
    Run a simulation and report the equilibrium candidates it played.

    Individual-learning algorithms are accepted but rarely produce identical
    plays; a warning is logged.

    Args:
        params: Run parameters
        max_candidates: Number of most frequent candidates to verify
        sink: Optional trace sink

    Returns:
        DiscoveryReport; candidates is empty when no identical-play game happened
    """
    if not params.kind.is_social:
        logger.warning(f"Discovery with individual-learning algorithm {params.kind.value}; identical plays are unlikely")

    context = RunContext.from_params(params)
    trace = run_simulation(params, sink=sink)

    tally: Counter = Counter()
    for generation in trace.generations:
        tally.update(generation.identical_plays)

    tolerance = context.codec.resolution / 2.0
    candidates = rank_candidates(tally, context.codec, context.model, tolerance, max_candidates)
    report = DiscoveryReport(
        params=params.to_dict(),
        q_hat=context.q_hat,
        tolerance=tolerance,
        identical_games=sum(tally.values()),
        total_games=trace.total_games,
        candidates=candidates,
        note=None if candidates else "no game was played with identical quantities",
    )
    logger.info(
        f"Discovery found {len(candidates)} candidates, {len(report.confirmed)} confirmed "
        f"({report.identical_games} identical-play games of {report.total_games})"
    )
    return report
