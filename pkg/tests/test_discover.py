"""
Test Script for Equilibrium Discovery
"""

import os
import sys
from collections import Counter

import pytest

# Add the project root directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.encoding.chromosome import QuantityCodec
from src.harness.discover import discover, rank_candidates
from src.market.models import get_model, symmetric_nash
from src.simulation.params import SimulationParams


def test_nash_locked_run_confirms_equilibrium():
    params = SimulationParams(model_id="radical4", kind="CS", K=4, p_mut=0.0, T=10, seed=1, L=20, init="nash")
    report = discover(params, max_candidates=5)
    assert report.identical_games == report.total_games == 40
    assert len(report.candidates) == 1
    best = report.candidates[0]
    assert best.chromosome == "01" * 10
    assert best.share == 1.0
    assert best.confirmed
    assert best.quantity == pytest.approx(report.q_hat, rel=1e-12)
    assert report.to_dict()["confirmed"][0]["value"] == best.value


def test_ranking_and_rejection_of_non_equilibria():
    model = get_model("linear4")
    codec = QuantityCodec.for_nash(symmetric_nash(model).q_hat, 8)
    tally = Counter({85: 7, 100: 7, 30: 2})
    candidates = rank_candidates(tally, codec, model, tolerance=codec.resolution / 2)
    assert [c.value for c in candidates] == [85, 100, 30]
    assert [c.confirmed for c in candidates] == [True, False, False]
    assert sum(c.share for c in candidates) == pytest.approx(1.0)
    assert len(rank_candidates(tally, codec, model, codec.resolution / 2, max_candidates=1)) == 1


def test_no_identical_plays_gives_empty_report():
    # every player holds its own quantity, so no game in the single round is symmetric
    populations = [[format(i + 1, "08b")] * 2 for i in range(4)]
    params = SimulationParams(
        model_id="linear4", kind="CP", K=2, p_mut=0.0, T=1, seed=3, L=8, init="explicit",
        explicit_populations=populations,
    )
    report = discover(params)
    assert report.identical_games == 0
    assert report.candidates == []
    assert report.note


if __name__ == "__main__":
    sys.exit(pytest.main([__file__]))
