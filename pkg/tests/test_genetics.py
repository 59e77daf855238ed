"""
Test Script for the Genetic Operators

Statistical checks of mutation and roulette selection, and structural
checks of crossover and population replacement.
"""

import os
import sys

import numpy as np
import pytest
from scipy import stats

# Add the project root directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.encoding.chromosome import Chromosome
from src.genetics.operators import (
    GAParams,
    Population,
    mutate,
    next_generation,
    profits_to_fitness,
    roulette_indices,
    roulette_select,
    single_point_crossover,
)
from src.utils.errors import ConfigurationError


@pytest.mark.parametrize("p_mut", [0.1, 0.001])
def test_mutation_flip_count_is_binomial(p_mut):
    bits = 100_000
    rng = np.random.default_rng(2024)
    c = Chromosome((0,) * bits)
    flipped = sum(mutate(c, p_mut, rng).bits)
    mean = bits * p_mut
    sigma = np.sqrt(bits * p_mut * (1 - p_mut))
    assert abs(flipped - mean) <= 3 * sigma


def test_mutation_extremes():
    rng = np.random.default_rng(0)
    c = Chromosome.from_string("0110")
    assert mutate(c, 0.0, rng) == c
    assert mutate(c, 1.0, rng) == c.complement()


ROULETTE_VECTORS = 5
ROULETTE_ALPHA = 0.01


@pytest.mark.parametrize("seed", range(ROULETTE_VECTORS))
def test_roulette_frequencies_follow_fitness(seed):
    """
    Chi-square goodness of fit on 10^5 draws. The five vectors are tested
    together at alpha = 0.01, so each one uses the Bonferroni cut 0.01 / 5.
    """
    rng = np.random.default_rng(seed)
    fit = rng.uniform(0.1, 5.0, size=8)
    draws = roulette_indices(fit, 100_000, rng)
    observed = np.bincount(draws, minlength=fit.size)
    expected = 100_000 * fit / fit.sum()
    _, p_value = stats.chisquare(observed, expected)
    assert p_value > ROULETTE_ALPHA / ROULETTE_VECTORS


def test_roulette_never_picks_zero_fitness():
    rng = np.random.default_rng(1)
    draws = roulette_indices(np.array([0.0, 1.0, 0.0, 3.0]), 5000, rng)
    assert set(draws.tolist()) <= {1, 3}


def test_roulette_rejects_bad_fitness():
    rng = np.random.default_rng(1)
    with pytest.raises(ConfigurationError):
        roulette_indices(np.zeros(4), 2, rng)
    with pytest.raises(ConfigurationError):
        roulette_indices(np.array([1.0, -1.0]), 2, rng)


def test_roulette_select_returns_members():
    pop = Population.from_chromosomes([Chromosome.from_string("0001"), Chromosome.from_string("1000")])
    chosen = roulette_select(pop, np.array([1.0, 1.0]), 10, np.random.default_rng(4))
    assert len(chosen) == 10
    assert set(chosen) <= set(pop.chromosomes())


def test_crossover_preserves_length_and_positions():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = Chromosome(tuple(rng.integers(0, 2, size=12)))
        b = Chromosome(tuple(rng.integers(0, 2, size=12)))
        c, d = single_point_crossover(a, b, rng)
        assert len(c) == len(d) == 12
        for k in range(12):
            assert sorted([a.bits[k], b.bits[k]]) == sorted([c.bits[k], d.bits[k]])


def test_crossover_fixed_cut():
    a = Chromosome.from_string("0000")
    b = Chromosome.from_string("1111")
    c, d = single_point_crossover(a, b, np.random.default_rng(0), cut=1)
    assert c.to_string() == "1110"
    assert d.to_string() == "0001"
    with pytest.raises(ConfigurationError):
        single_point_crossover(a, b, np.random.default_rng(0), cut=4)


def test_fitness_shift():
    fit = profits_to_fitness([-5.0, 0.0, 10.0])
    assert np.all(fit > 0)
    assert np.argsort(fit).tolist() == [0, 1, 2]
    assert fit[2] - fit[0] == pytest.approx(15.0)
    assert np.all(profits_to_fitness([3.0, 3.0]) > 0)


def test_next_generation_shape_and_determinism():
    rng = np.random.default_rng(5)
    pop = Population(rng.integers(0, 2, size=(10, 8), dtype=np.uint8), owner=0)
    fit = rng.uniform(1, 2, size=10)
    params = GAParams(p_mut=0.05)
    a = next_generation(pop, fit, params, np.random.default_rng(9))
    b = next_generation(pop, fit, params, np.random.default_rng(9))
    assert a.members.shape == (10, 8)
    assert a.owner == 0
    assert np.array_equal(a.members, b.members)


def test_next_generation_without_mutation_keeps_uniform_population():
    pop = Population(np.tile(np.array([1, 0, 1, 0, 1, 0], dtype=np.uint8), (6, 1)))
    child = next_generation(pop, np.ones(6), GAParams(p_mut=0.0), np.random.default_rng(0))
    assert np.array_equal(child.members, pop.members)


def test_next_generation_without_crossover_copies_parents():
    rng = np.random.default_rng(8)
    pop = Population(rng.integers(0, 2, size=(8, 10), dtype=np.uint8))
    child = next_generation(pop, np.ones(8), GAParams(p_mut=0.0, p_cross=0.0), rng)
    parents = {row.tobytes() for row in pop.members}
    assert all(row.tobytes() in parents for row in child.members)


def test_next_generation_rejects_odd_population():
    pop = Population(np.zeros((5, 4), dtype=np.uint8))
    with pytest.raises(ConfigurationError):
        next_generation(pop, np.ones(5), GAParams(p_mut=0.01), np.random.default_rng(0))


def test_ga_params_validation():
    with pytest.raises(ConfigurationError):
        GAParams(p_mut=1.5)
    with pytest.raises(ConfigurationError):
        GAParams(p_mut=0.1, p_cross=-0.1)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__]))
