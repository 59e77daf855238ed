"""
Simulation Engine Module

The four co-evolutionary learning engines: Vriend individual (VI) and social
(VS) learning, co-evolutionary programming (CP) and its social variant (CS).

Each player owns a population of K chromosomes. Individual variants breed
every population from its own members; social variants pool all n*K
chromosomes, breed the pool once and hand offspring back in order, so that
offspring i*K .. (i+1)*K-1 become player i's population.

Random draws happen in this order: initial bits (random init only), then per
generation the game draws (per-period choices for VI/VS, one permutation per
player for CP/CS), then breeding (player by player, or the pool once).
"""

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from src.analysis.markov import lumped_state_of
from src.encoding.chromosome import (
    Chromosome,
    QuantityCodec,
    anti_nash_chromosome,
    hamming_to,
    nash_chromosome,
)
from src.genetics.operators import GAParams, Population, next_generation, profits_to_fitness
from src.market.models import MarketModel, play_games, symmetric_nash
from src.simulation.params import InitMode, SimulationParams
from src.simulation.trace import GameRecord, GenerationTrace, MemorySink, RunTrace
from src.utils.errors import ConfigurationError

# Configure logging
logger = logging.getLogger(__name__)

RNG_DESCRIPTION = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class RunContext:
    """Quantities derived once per run from its parameters."""

    params: SimulationParams
    model: MarketModel
    codec: QuantityCodec
    nash: Chromosome
    q_hat: float
    ga: GAParams

    @property
    def nash_value(self) -> int:
        return self.nash.value

    @classmethod
    def from_params(cls, params: SimulationParams) -> "RunContext":
        model = params.model
        q_hat = symmetric_nash(model).q_hat
        codec = QuantityCodec.for_nash(q_hat, params.L)
        return cls(
            params=params,
            model=model,
            codec=codec,
            nash=nash_chromosome(codec),
            q_hat=q_hat,
            ga=GAParams(p_mut=params.p_mut, p_cross=params.p_cross),
        )


class SimulationState:
    """
    Mutable state of one run.

    profits[i, j] is the last realized profit of chromosome j of player i in
    the current generation; played[i, j] marks chromosomes that have played.
    """

    def __init__(self, populations: List[Population]):
        self.populations = populations
        n, K = len(populations), populations[0].size
        self.profits = np.zeros((n, K), dtype=float)
        self.played = np.zeros((n, K), dtype=bool)
        self.period = 0
        self.generation = 0

    @property
    def n(self) -> int:
        return len(self.populations)

    @property
    def K(self) -> int:
        return self.populations[0].size

    def stacked(self) -> np.ndarray:
        """All members as an (n, K, L) bit array."""
        return np.stack([p.members for p in self.populations])

    def reset_fitness(self) -> None:
        self.profits.fill(0.0)
        self.played.fill(False)


@dataclass
class PlayedGames:
    """Games of one generation (or one period) in array form."""

    choices: np.ndarray
    values: np.ndarray
    quantities: np.ndarray
    prices: np.ndarray
    profits: np.ndarray
    first_period: int

    @property
    def count(self) -> int:
        return self.choices.shape[0]

    def records(self, generation: int) -> List[GameRecord]:
        return [
            GameRecord(
                generation=generation,
                period=self.first_period + g,
                choices=self.choices[g].tolist(),
                quantities=self.quantities[g].tolist(),
                price=float(self.prices[g]),
                profits=self.profits[g].tolist(),
            )
            for g in range(self.count)
        ]


def init_state(params: SimulationParams, rng: np.random.Generator, context: Optional[RunContext] = None) -> SimulationState:
    """
    Build the initial populations.

    Args:
        params: Run parameters
        rng: Random generator (consumed by random init only)
        context: Precomputed run context

    Returns:
        SimulationState with no chromosome played yet

    Raises:
        ConfigurationError: Explicit populations with the wrong shape
    """
    context = context or RunContext.from_params(params)
    n, K, L = context.model.n, params.K, params.L

    if params.init is InitMode.RANDOM:
        bits = rng.integers(0, 2, size=(n, K, L), dtype=np.uint8)
    elif params.init is InitMode.NASH:
        bits = np.broadcast_to(context.nash.to_array(), (n, K, L)).copy()
    elif params.init is InitMode.ANTI_NASH:
        bits = np.broadcast_to(anti_nash_chromosome(context.codec).to_array(), (n, K, L)).copy()
    else:
        explicit = params.explicit_populations
        if len(explicit) != n or any(len(pop) != K for pop in explicit):
            raise ConfigurationError(f"Explicit populations must be {n} lists of {K} chromosomes")
        chromosomes = [[Chromosome.from_string(s) for s in pop] for pop in explicit]
        if any(len(c) != L for pop in chromosomes for c in pop):
            raise ConfigurationError(f"Explicit chromosomes must have {L} bits")
        bits = np.array([[c.to_array() for c in pop] for pop in chromosomes], dtype=np.uint8)

    return SimulationState([Population(bits[i], owner=i) for i in range(n)])


def _play(state: SimulationState, context: RunContext, choices: np.ndarray) -> PlayedGames:
    """Play the games given by a (G, n) matrix of chromosome indices."""
    players = np.arange(state.n)
    values = context.codec.values_of(state.stacked())[players, choices]
    quantities = context.codec.decode_value(values)
    _, prices, profits = play_games(context.model, quantities)
    games = PlayedGames(choices, values, quantities, prices, profits, first_period=state.period)
    state.period += games.count
    return games


def vriend_periods(state: SimulationState, context: RunContext, rng: np.random.Generator, count: int) -> PlayedGames:
    """
    Play count Vriend periods.

    Each period every player picks one of its own chromosomes uniformly at
    random; the chosen chromosome's profit cell is overwritten, so a
    chromosome played several times keeps its latest profit.
    """
    choices = rng.integers(0, state.K, size=(count, state.n))
    games = _play(state, context, choices)
    for i in range(state.n):
        latest, last_index = np.unique(choices[::-1, i], return_index=True)
        state.profits[i, latest] = games.profits[::-1, i][last_index]
        state.played[i, latest] = True
    return games


def vriend_period(state: SimulationState, context: RunContext, rng: np.random.Generator) -> GameRecord:
    """
    Play a single Vriend period.

    Args:
        state: Current run state
        context: Run context (model and codec)
        rng: Random generator

    Returns:
        The game record of the period
    """
    return vriend_periods(state, context, rng, 1).records(state.generation + 1)[0]


def _fitness(profits: np.ndarray, played: np.ndarray) -> np.ndarray:
    """Unplayed chromosomes are scored at the mean profit of the played ones."""
    values = profits.astype(float).copy()
    if played.any():
        values[~played] = values[played].mean()
    else:
        values[:] = 0.0
    return profits_to_fitness(values)


def update_populations(state: SimulationState, context: RunContext, rng: np.random.Generator) -> List[Population]:
    """
    Breed the next generation of every player.

    Individual kinds breed each population on its own fitness; social kinds
    breed the union of all populations and split the offspring in order.
    """
    kind = context.params.kind
    if kind.is_social:
        pooled = Population(np.concatenate([p.members for p in state.populations]), owner="pooled")
        fitness = _fitness(state.profits.ravel(), state.played.ravel())
        offspring = next_generation(pooled, fitness, context.ga, rng)
        K = state.K
        new_populations = [
            Population(offspring.members[i * K:(i + 1) * K], owner=i) for i in range(state.n)
        ]
    else:
        new_populations = [
            next_generation(pop, _fitness(state.profits[i], state.played[i]), context.ga, rng)
            for i, pop in enumerate(state.populations)
        ]

    state.populations = new_populations
    state.reset_fitness()
    state.generation += 1
    return new_populations


def vriend_generation_update(state: SimulationState, context: RunContext, rng: np.random.Generator) -> List[Population]:
    """
    Population update after GArate periods (VI: per player, VS: pooled).

    Args:
        state: Current run state
        context: Run context
        rng: Random generator

    Returns:
        The new populations
    """
    if not context.params.kind.is_vriend:
        raise ConfigurationError(f"Vriend update called for algorithm {context.params.kind.value}")
    return update_populations(state, context, rng)


def play_coevol_round(state: SimulationState, context: RunContext, rng: np.random.Generator) -> PlayedGames:
    """
    One round of co-evolutionary matching without the population update.

    A uniform permutation is drawn for every player; game j pits the j-th
    entry of each permutation, so every chromosome plays exactly once.
    """
    permutations = np.stack([rng.permutation(state.K) for _ in range(state.n)], axis=1)
    games = _play(state, context, permutations)
    players = np.arange(state.n)
    state.profits[players[None, :], permutations] = games.profits
    state.played[:] = True
    return games


def _summarize(state: SimulationState, context: RunContext, games: PlayedGames) -> GenerationTrace:
    params = context.params
    members = state.stacked()
    flat = members.reshape(-1, members.shape[-1])

    per_game_q = games.quantities.mean(axis=1)
    mean_q = float(per_game_q.mean())
    all_same = np.all(games.values == games.values[:, :1], axis=1)
    identical = Counter(int(v) for v in games.values[all_same, 0])

    return GenerationTrace(
        generation=state.generation,
        lumped_state=lumped_state_of(members, context.nash),
        mean_hamming=float(hamming_to(flat, context.nash).mean()),
        ne_games=int(identical.get(context.nash_value, 0)),
        games=games.count,
        mean_q=mean_q,
        q_m2=float(((per_game_q - mean_q) ** 2).sum()),
        player_mean_q=games.quantities.mean(axis=0).tolist(),
        mean_price=float(games.prices.mean()),
        population_hash=population_hash(members),
        identical_plays=dict(identical),
        game_records=games.records(state.generation) if params.record_games else None,
        populations=(
            [[Chromosome.from_array(row).to_string() for row in pop.members] for pop in state.populations]
            if params.store_populations else None
        ),
    )


def coevol_generation(state: SimulationState, context: RunContext, rng: np.random.Generator) -> GenerationTrace:
    """
    One CP/CS generation: a full round of matches, then the update.

    Args:
        state: Current run state
        context: Run context
        rng: Random generator

    Returns:
        GenerationTrace with exactly K games
    """
    if context.params.kind.is_vriend:
        raise ConfigurationError(f"Co-evolutionary generation called for algorithm {context.params.kind.value}")
    games = play_coevol_round(state, context, rng)
    update_populations(state, context, rng)
    return _summarize(state, context, games)


def vriend_generation(state: SimulationState, context: RunContext, rng: np.random.Generator) -> GenerationTrace:
    """One VI/VS generation: GArate periods, then the update."""
    games = vriend_periods(state, context, rng, context.params.ga_rate)
    vriend_generation_update(state, context, rng)
    return _summarize(state, context, games)


def population_hash(members: np.ndarray) -> str:
    """Short digest of the packed population bits."""
    return hashlib.sha1(np.packbits(members, axis=-1).tobytes()).hexdigest()[:16]


def run_header(context: RunContext, state: SimulationState) -> Dict:
    params = context.params
    members = state.stacked()
    return {
        "params": params.to_dict(),
        "model": context.model.name,
        "n": context.model.n,
        "K": params.K,
        "L": params.L,
        "q_hat": context.q_hat,
        "q_max": context.codec.q_max,
        "nash_chromosome": context.nash.to_string(),
        "initial_state": lumped_state_of(members, context.nash),
        "initial_mean_hamming": float(hamming_to(members.reshape(-1, params.L), context.nash).mean()),
        "initial_population_hash": population_hash(members),
        "rng": RNG_DESCRIPTION,
    }


def run_simulation(params: SimulationParams, sink=None) -> RunTrace:
    """
    Run T generations of the configured algorithm.

    Args:
        params: Run parameters
        sink: Trace sink (MemorySink or JsonlTraceWriter); in-memory when omitted

    Returns:
        The RunTrace kept by the sink

    Raises:
        TraceError: Writing to the sink failed (carries the generation index)
        ModelParameterError: The model has no symmetric equilibrium
    """
    sink = sink if sink is not None else MemorySink()
    step = vriend_generation if params.kind.is_vriend else coevol_generation
    try:
        context = RunContext.from_params(params)
        rng = np.random.default_rng(params.seed)
        state = init_state(params, rng, context)
        logger.info(
            f"Starting {params.kind.value} run on {context.model.name}: K={params.K}, L={params.L}, "
            f"p_mut={params.p_mut}, T={params.T}, seed={params.seed}"
        )
        sink.write_header(run_header(context, state))
        for _ in range(params.T):
            record = step(state, context, rng)
            sink.write_generation(record)
            if record.generation % 1000 == 0:
                logger.debug(f"Generation {record.generation}: state S{record.lumped_state}, NE games {record.ne_games}")
    finally:
        sink.close()

    logger.info(f"Finished run seed={params.seed} after {state.generation} generations ({state.period} games)")
    return sink.trace


def expected_profit_coevol_oracle(
    populations,
    model: MarketModel,
    codec: QuantityCodec,
    samples: int = 100_000,
    rng: Optional[np.random.Generator] = None,
    max_profiles: int = 1_000_000,
) -> np.ndarray:
    """
    Expected profit of every chromosome under uniform random matching.

    For chromosome j of player i the expectation runs over all opponent
    profiles, each opponent drawing one of its K chromosomes uniformly.
    Exact enumeration is used when K^(n-1) <= max_profiles, Monte Carlo
    with `samples` profiles otherwise.

    Args:
        populations: (n, K, L) bit array or list of Population
        model: Market model
        codec: Quantity codec
        samples: Monte Carlo sample size
        rng: Random generator for the Monte Carlo branch
        max_profiles: Enumeration limit

    Returns:
        (n, K) array of expected profits
    """
    if isinstance(populations, np.ndarray):
        members = populations
    else:
        members = np.stack([getattr(p, "members", p) for p in populations])
    quantities = codec.decode_array(members)
    n, K = quantities.shape
    expected = np.empty((n, K), dtype=float)
    exact = K ** (n - 1) <= max_profiles
    rng = rng or np.random.default_rng(0)

    for i in range(n):
        others = [quantities[l] for l in range(n) if l != i]
        if not others:
            opponent_totals = np.zeros(1)
        elif exact:
            opponent_totals = np.zeros(1)
            for q_l in others:
                opponent_totals = (opponent_totals[:, None] + q_l[None, :]).ravel()
        else:
            picks = rng.integers(0, K, size=(samples, n - 1))
            opponent_totals = np.stack(others)[np.arange(n - 1), picks].sum(axis=1)
        own = quantities[i][:, None]
        payoff = model.demand.price(own + opponent_totals[None, :]) * own - model.cost.total(own)
        expected[i] = payoff.mean(axis=1)
    return expected

