"""
Genetic Operators Module

Roulette-wheel selection, single-point crossover, per-bit mutation and the
profit-to-fitness transform. Every stochastic operator takes an explicit
numpy Generator so that a run is reproducible from its seed.

Within next_generation the generator is consumed in this order: parent
indices for all pairs, cut points for all pairs, crossover coins (only when
p_cross < 1), then one uniform draw per offspring bit for mutation.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.encoding.chromosome import Chromosome
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

FitnessVector = np.ndarray


@dataclass
class Population:
    """
    K chromosomes stored as a (K, L) uint8 bit array.

    Column k holds the bit of weight 2^k. owner is a player index or
    "pooled" for the social union of all players.
    """

    members: np.ndarray
    owner: Union[int, str] = "pooled"

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=np.uint8)
        if self.members.ndim != 2:
            raise ConfigurationError(f"Population members must be a 2-D bit array, got shape {self.members.shape}")

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def length(self) -> int:
        return self.members.shape[1]

    @classmethod
    def from_chromosomes(cls, chromosomes: Sequence[Chromosome], owner: Union[int, str] = "pooled") -> "Population":
        lengths = {len(c) for c in chromosomes}
        if len(lengths) != 1:
            raise ConfigurationError(f"Population members must share one length, got {sorted(lengths)}")
        return cls(np.array([c.to_array() for c in chromosomes], dtype=np.uint8), owner)

    def chromosomes(self) -> List[Chromosome]:
        return [Chromosome.from_array(row) for row in self.members]

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class GAParams:
    """Operator probabilities, constant for a whole run."""

    p_mut: float
    p_cross: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p_mut <= 1.0:
            raise ConfigurationError(f"Mutation probability must lie in [0, 1], got {self.p_mut}")
        if not 0.0 <= self.p_cross <= 1.0:
            raise ConfigurationError(f"Crossover probability must lie in [0, 1], got {self.p_cross}")


def profits_to_fitness(profits: Sequence[float]) -> FitnessVector:
    """
    Shift profits so the worst member gets a small positive fitness.

    fitness_i = profit_i - min + eps, eps = 1e-6 * (max - min), or 1e-6 when
    all profits are equal.

    Args:
        profits: Non-empty list of profits

    Returns:
        Strictly positive fitness array preserving the profit order
    """
    values = np.asarray(profits, dtype=float)
    if values.size == 0:
        raise ConfigurationError("Cannot build fitness from an empty profit list")
    low, high = values.min(), values.max()
    spread = high - low
    eps = 1e-6 * (spread if spread > 0 else 1.0)
    return values - low + eps


def roulette_indices(fit: FitnessVector, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw count member indices with probability fit_j / sum(fit), with replacement.

    Raises:
        ConfigurationError: Negative weights or zero total fitness
    """
    weights = np.asarray(fit, dtype=float)
    total = weights.sum()
    if np.any(weights < 0) or not total > 0:
        raise ConfigurationError("Roulette selection needs non-negative fitness with a positive total")
    return rng.choice(weights.shape[0], size=count, p=weights / total)


def roulette_select(pop: Population, fit: FitnessVector, count: int, rng: np.random.Generator) -> List[Chromosome]:
    """
    Fitness-proportional selection.

    Args:
        pop: Population to select from
        fit: Fitness aligned with pop
        count: Number of independent draws
        rng: Random generator

    Returns:
        Selected chromosomes
    """
    if len(fit) != pop.size:
        raise ConfigurationError(f"Fitness length {len(fit)} does not match population size {pop.size}")
    return [Chromosome.from_array(pop.members[j]) for j in roulette_indices(fit, count, rng)]


def single_point_crossover(
    parent_a: Chromosome, parent_b: Chromosome, rng: np.random.Generator, cut: Optional[int] = None
) -> Tuple[Chromosome, Chromosome]:
    """
    Swap the parents' high-order suffixes after a random cut.

    The cut c is drawn uniformly from 1..L-1; the first child keeps the c
    low-order bits of parent_a and takes the rest from parent_b.

    Args:
        parent_a: First parent
        parent_b: Second parent
        rng: Random generator
        cut: Fixed cut position (drawn when omitted)

    Returns:
        The two children
    """
    L = len(parent_a)
    if L != len(parent_b):
        raise ConfigurationError(f"Parents have different lengths {L} and {len(parent_b)}")
    if L < 2:
        raise ConfigurationError("Crossover needs chromosomes of at least 2 bits")
    if cut is None:
        cut = int(rng.integers(1, L))
    elif not 1 <= cut <= L - 1:
        raise ConfigurationError(f"Cut position must lie in 1..{L - 1}, got {cut}")

    child_a = Chromosome(parent_a.bits[:cut] + parent_b.bits[cut:])
    child_b = Chromosome(parent_b.bits[:cut] + parent_a.bits[cut:])
    return child_a, child_b


def mutate(c: Chromosome, p_mut: float, rng: np.random.Generator) -> Chromosome:
    """Flip each bit independently with probability p_mut."""
    flips = rng.random(len(c)) < p_mut
    return Chromosome(tuple(b ^ int(f) for b, f in zip(c.bits, flips)))


def next_generation(pop: Population, fit: FitnessVector, params: GAParams, rng: np.random.Generator) -> Population:
    """
    Breed a full replacement population, without elitism.

    K/2 times: two parents by roulette, single-point crossover (always, at
    p_cross = 1), both children mutated. Children are stored pairwise in
    draw order.

    Args:
        pop: Current population, even size
        fit: Fitness aligned with pop
        params: Operator probabilities
        rng: Random generator

    Returns:
        New population of the same size and length

    Raises:
        ConfigurationError: Odd population size or misaligned fitness
    """
    K, L = pop.size, pop.length
    if K % 2:
        raise ConfigurationError(f"Population size must be even, got {K}")
    if len(fit) != K:
        raise ConfigurationError(f"Fitness length {len(fit)} does not match population size {K}")
    if L < 2:
        raise ConfigurationError("Crossover needs chromosomes of at least 2 bits")

    pairs = K // 2
    parents = roulette_indices(fit, 2 * pairs, rng).reshape(pairs, 2)
    cuts = rng.integers(1, L, size=pairs)
    if params.p_cross < 1.0:
        crossed = rng.random(pairs) < params.p_cross
        cuts = np.where(crossed, cuts, L)

    first = pop.members[parents[:, 0]]
    second = pop.members[parents[:, 1]]
    low_bits = np.arange(L)[None, :] < cuts[:, None]
    children = np.empty((pairs, 2, L), dtype=np.uint8)
    children[:, 0] = np.where(low_bits, first, second)
    children[:, 1] = np.where(low_bits, second, first)
    children = children.reshape(K, L)

    flips = rng.random((K, L)) < params.p_mut
    children ^= flips.astype(np.uint8)
    return Population(children, owner=pop.owner)
