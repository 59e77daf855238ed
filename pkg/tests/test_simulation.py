"""
Test Script for the Simulation Engines

Runs the four learning algorithms on small instances and checks matching,
fitness bookkeeping, social pooling, determinism and the trace files.
"""

import os
import sys

import numpy as np
import pytest

# Add the project root directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.analysis.markov import chain_stats
from src.encoding.chromosome import QuantityCodec, nash_chromosome
from src.genetics.operators import Population, profits_to_fitness
from src.market.models import best_response, build_model, get_model, play_games, profit, symmetric_nash
from src.simulation.engine import (
    RunContext,
    SimulationState,
    coevol_generation,
    expected_profit_coevol_oracle,
    init_state,
    play_coevol_round,
    run_simulation,
    update_populations,
    vriend_generation_update,
    vriend_period,
    vriend_periods,
)
from src.simulation.params import SimulationParams
from src.simulation.trace import JsonlTraceWriter, read_trace
from src.utils.errors import ConfigurationError, UnsupportedConfigurationError
from src.utils.seeding import derive_seed

KINDS = ["VI", "VS", "CP", "CS"]


def small_params(kind="CP", **overrides):
    values = dict(model_id="linear4", kind=kind, K=6, p_mut=0.01, T=20, seed=42, L=8)
    values.update(overrides)
    return SimulationParams(**values)


@pytest.mark.parametrize("kind", KINDS)
def test_nash_locked_run_stays_in_nash_state(kind):
    trace = run_simulation(small_params(kind, p_mut=0.0, init="nash", T=15))
    assert trace.initial_state == 0
    assert all(g.lumped_state == 0 for g in trace.generations)
    assert all(g.ne_games == g.games for g in trace.generations)
    assert all(g.mean_q == pytest.approx(trace.q_hat) for g in trace.generations)


@pytest.mark.parametrize("kind", KINDS)
def test_games_per_generation(kind):
    params = small_params(kind, ga_rate=7)
    trace = run_simulation(params)
    expected = 7 if kind in ("VI", "VS") else params.K
    assert all(g.games == expected for g in trace.generations)
    assert trace.total_games == expected * params.T
    assert [g.generation for g in trace.generations] == list(range(1, params.T + 1))


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_same_trajectory(kind):
    a = run_simulation(small_params(kind))
    b = run_simulation(small_params(kind))
    c = run_simulation(small_params(kind, seed=43))
    hashes = lambda t: [g.population_hash for g in t.generations]
    assert hashes(a) == hashes(b)
    assert hashes(a) != hashes(c)


def test_anti_nash_start_is_farthest_state():
    trace = run_simulation(small_params("CS", init="anti_nash", T=2))
    assert trace.initial_state == 8
    assert trace.header["initial_mean_hamming"] == 8.0


def test_random_init_bits_are_fair():
    params = SimulationParams(model_id="poly4", kind="VS", K=40, p_mut=0.0, T=1, seed=11)
    state = init_state(params, np.random.default_rng(params.seed))
    bits = state.stacked()
    assert bits.shape == (4, 40, 20)
    assert 0.45 <= bits.mean() <= 0.55


@pytest.mark.parametrize("kind", ["VI", "VS"])
def test_vriend_choice_is_uniform(kind):
    params = small_params(kind, K=20)
    context = RunContext.from_params(params)
    rng = np.random.default_rng(8)
    state = init_state(params, rng, context)
    periods = 10_000
    games = vriend_periods(state, context, rng, periods)
    expected = periods / params.K
    sigma = np.sqrt(periods * (1 / params.K) * (1 - 1 / params.K))
    for i in range(context.model.n):
        counts = np.bincount(games.choices[:, i], minlength=params.K)
        # 80 cells in total, so 4 sigma per cell
        assert np.all(np.abs(counts - expected) <= 4 * sigma)


def test_odd_breeding_population_rejected():
    with pytest.raises(ConfigurationError):
        small_params("VI", K=5)
    # pooled social population n*K is even
    assert small_params("VS", K=5).K == 5
    with pytest.raises(UnsupportedConfigurationError):
        small_params("CP", L=7)


def test_explicit_populations_shape_checked():
    params = small_params("CP", K=2, init="explicit", explicit_populations=[["01010101", "00000000"]] * 3)
    with pytest.raises(ConfigurationError):
        run_simulation(params)


def test_explicit_populations_are_used():
    pops = [["01010101", "11111111"] for _ in range(4)]
    params = small_params("CP", K=2, init="explicit", explicit_populations=pops)
    state = init_state(params, np.random.default_rng(0))
    assert state.stacked().shape == (4, 2, 8)
    context = RunContext.from_params(params)
    assert context.codec.values_of(state.stacked())[:, 0].tolist() == [85] * 4
    assert context.codec.values_of(state.stacked())[:, 1].tolist() == [255] * 4


def test_coevol_round_plays_every_chromosome_once():
    params = small_params("CP")
    context = RunContext.from_params(params)
    rng = np.random.default_rng(1)
    state = init_state(params, rng, context)
    games = play_coevol_round(state, context, rng)
    assert games.count == params.K
    for i in range(4):
        assert sorted(games.choices[:, i].tolist()) == list(range(params.K))
    assert state.played.all()
    players = np.arange(4)
    assert np.allclose(state.profits[players[None, :], games.choices], games.profits)


def test_vriend_keeps_latest_profit():
    params = small_params("VI", K=4)
    context = RunContext.from_params(params)
    rng = np.random.default_rng(2)
    state = init_state(params, rng, context)
    games = vriend_periods(state, context, rng, 40)
    for i in range(4):
        for j in range(4):
            plays = np.flatnonzero(games.choices[:, i] == j)
            if plays.size:
                assert state.played[i, j]
                assert state.profits[i, j] == games.profits[plays[-1], i]
            else:
                assert not state.played[i, j]


def test_vriend_period_returns_one_game():
    params = small_params("VS")
    context = RunContext.from_params(params)
    rng = np.random.default_rng(3)
    state = init_state(params, rng, context)
    record = vriend_period(state, context, rng)
    assert len(record.choices) == 4
    assert state.period == 1


def test_update_kind_checks():
    params = small_params("CP")
    context = RunContext.from_params(params)
    state = init_state(params, np.random.default_rng(0), context)
    with pytest.raises(ConfigurationError):
        vriend_generation_update(state, context, np.random.default_rng(0))
    vriend = small_params("VI")
    vcontext = RunContext.from_params(vriend)
    with pytest.raises(ConfigurationError):
        coevol_generation(init_state(vriend, np.random.default_rng(0), vcontext), vcontext, np.random.default_rng(0))


def _two_player_state(kind):
    params = small_params(kind, model_id="linear20", K=4, p_mut=0.0)
    context = RunContext.from_params(params)
    n = context.model.n
    high = np.tile(np.array([1, 1, 0, 0, 0, 0, 0, 0], dtype=np.uint8), (4, 1))
    low = np.tile(np.array([0, 0, 0, 0, 0, 0, 0, 1], dtype=np.uint8), (4, 1))
    populations = [Population(high.copy(), owner=0)] + [Population(low.copy(), owner=i) for i in range(1, n)]
    state = SimulationState(populations)
    state.profits[0, :] = 1000.0
    state.played[:] = True
    return state, context, high, low


def test_social_update_spreads_best_chromosomes():
    state, context, high, _ = _two_player_state("CS")
    update_populations(state, context, np.random.default_rng(0))
    pooled = np.concatenate([pop.members for pop in state.populations])
    matches = np.all(pooled == high[0], axis=1)
    # low-profit members keep a fitness floor of 1e-6 of the spread
    assert matches.mean() >= 0.95
    assert all(np.all(pop.members == high[0], axis=1).any() for pop in state.populations[1:])
    assert state.generation == 1
    assert not state.played.any()


def test_individual_update_keeps_players_apart():
    state, context, high, low = _two_player_state("CP")
    update_populations(state, context, np.random.default_rng(0))
    assert np.array_equal(state.populations[0].members, high)
    for pop in state.populations[1:]:
        assert np.array_equal(pop.members, low)


def test_pooled_fitness_favours_overproduction():
    model = get_model("poly4")
    q_hat = symmetric_nash(model).q_hat

    def wheel(delta):
        quantities = np.array([[q_hat] * 4, [q_hat + delta, q_hat, q_hat, q_hat]])
        _, _, profits = play_games(model, quantities)
        fitness = profits_to_fitness(profits.ravel())
        return profits, fitness / fitness.sum()

    profits, share = wheel(0.5)
    # the over-producer earns less than a Nash player in the other game ...
    assert profits[1, 0] < profits[0, 0]
    # ... yet its own opponents fall to the fitness floor
    assert share[4] > 1 / 8
    assert share[5:].max() < 1e-5

    _, share = wheel(-0.5)
    assert share[4] < 1e-5


def test_twenty_player_social_run_reaches_nash_state():
    for replicate in range(3):
        params = SimulationParams(
            model_id="poly20", kind="VS", K=20, p_mut=0.0001, T=10000, seed=derive_seed(0, 0, replicate)
        )
        stats = chain_stats(run_simulation(params))
        if stats.gen_to_ne is not None:
            break
    assert stats.gen_to_ne is not None
    assert stats.freq[0] > 0.0
    assert stats.expected_hamming < 4.0


def test_trace_file_round_trip(tmp_path):
    params = small_params("VS", T=12, record_games=True, store_populations=True)
    path = str(tmp_path / "traces" / "seed_42.jsonl")
    written = run_simulation(params, sink=JsonlTraceWriter(path))
    loaded = read_trace(path)
    assert loaded.header["nash_chromosome"] == "01010101"
    assert loaded.lumped_states.tolist() == written.lumped_states.tolist()
    assert [g.population_hash for g in loaded.generations] == [g.population_hash for g in written.generations]
    assert len(loaded.game_records()) == params.ga_rate * params.T
    assert len(loaded.generations[0].populations) == 4


def test_oracle_matches_realized_coevol_profits():
    model = build_model("linear", a=256, b=1, x=56, y=0, n=2, name="duopoly")
    params = SimulationParams(model_id="duopoly", kind="CP", K=2, p_mut=0.0, T=1, seed=5, L=4, custom_model=model)
    context = RunContext.from_params(params)
    rng = np.random.default_rng(6)
    state = init_state(params, rng, context)
    state.populations[0].members[:] = [[1, 0, 1, 0], [1, 1, 0, 0]]
    state.populations[1].members[:] = [[0, 1, 1, 0], [1, 1, 1, 1]]

    rounds = 10_000
    samples = np.empty((rounds, 2, 2))
    for r in range(rounds):
        play_coevol_round(state, context, rng)
        samples[r] = state.profits
    realized = samples.mean(axis=0)
    sigma = samples.std(axis=0) / np.sqrt(rounds)

    oracle = expected_profit_coevol_oracle(state.populations, model, context.codec)
    assert np.all(np.abs(realized - oracle) <= 4 * sigma + 1e-9)


def test_oracle_monte_carlo_agrees_with_enumeration():
    model = get_model("poly4")
    codec = QuantityCodec.for_nash(symmetric_nash(model).q_hat, 8)
    members = np.random.default_rng(9).integers(0, 2, size=(4, 4, 8), dtype=np.uint8)
    exact = expected_profit_coevol_oracle(members, model, codec)
    sampled = expected_profit_coevol_oracle(members, model, codec, samples=200_000, rng=np.random.default_rng(1), max_profiles=1)
    assert np.allclose(exact, sampled, rtol=0.02, atol=0.02 * np.abs(exact).max())


def test_discrete_best_response_within_one_step():
    model = get_model("poly4")
    q_hat = symmetric_nash(model).q_hat
    codec = QuantityCodec.for_nash(q_hat, 8)
    for opponents in (2.5 * q_hat, 3.0 * q_hat, 3.5 * q_hat):
        grid = codec.decode_value(np.arange(256))
        discrete = grid[np.argmax(profit(model, grid, grid + opponents))]
        assert abs(discrete - best_response(model, opponents).quantity) <= codec.resolution
    assert nash_chromosome(codec).value == 85


if __name__ == "__main__":
    sys.exit(pytest.main([__file__]))
