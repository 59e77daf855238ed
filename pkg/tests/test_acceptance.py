"""
Test Script for Desk-Scale Replication

Long stochastic checks against the published results. They take minutes
to an hour and only run when COURNOT_GA_SLOW=1.
"""

import os
import sys

import pytest

# Add the project root directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.harness.replicate import replicate
from src.memory.trace_store import TraceStore

pytestmark = pytest.mark.skipif(os.environ.get("COURNOT_GA_SLOW") != "1", reason="set COURNOT_GA_SLOW=1 to run")


def failed_checks(report):
    return [f"{row.label}: {c.name}={c.reproduced} ({c.bound})" for row in report.rows for c in row.checks if not c.passed]


def test_individual_learning_does_not_converge(tmp_path):
    report = replicate("table1", TraceStore(str(tmp_path)), scale=30, progress=False)
    assert not failed_checks(report)


def test_social_learning_reaches_equilibrium(tmp_path):
    report = replicate("table6", TraceStore(str(tmp_path)), scale=30, rows=["table6_poly20_"], progress=False)
    assert [row.label for row in report.rows] == ["table6_poly20_VS", "table6_poly20_CS"]
    assert not failed_checks(report)


@pytest.mark.xfail(reason="pooled breeding settles above q_hat in 4-player markets at L=20", strict=False)
def test_four_player_social_learning_reaches_equilibrium(tmp_path):
    report = replicate("table6", TraceStore(str(tmp_path)), scale=30, rows=["table6_poly4_"], progress=False)
    assert all(row.note for row in report.rows)
    assert not failed_checks(report)


def test_twenty_player_frequency_contrast(tmp_path):
    report = replicate("table4", TraceStore(str(tmp_path)), progress=False)
    assert not failed_checks(report)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__]))
