"""
Test Script for the Replication Tables

Checks the table catalogue and runs one heavily shortened row end to end.
"""

import os
import sys

import pytest

# Add the project root directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.harness.replicate import NE_STATISTICS, TABLES, replicate, table_rows
from src.harness.experiment import ExperimentConfig
from src.memory.trace_store import TraceStore
from src.utils.errors import ConfigurationError


@pytest.mark.parametrize("table", TABLES)
def test_rows_are_valid_experiments(table):
    for spec in table_rows(table, scale=2, t_scale=0.001):
        config = ExperimentConfig.from_dict(dict(spec.config, label=spec.label))
        assert len(config.expand()) == 1


def test_table_shapes():
    assert len(table_rows("table1")) == 2
    assert len(table_rows("table3")) == 4
    assert len(table_rows("table5")) == 12
    rows = table_rows("table6", scale=5)
    assert len(rows) == len(NE_STATISTICS) == 12
    assert all(r.config["init"] == "anti_nash" and r.config["seeds"] == 5 for r in rows)
    # single-run tables ignore the scale
    assert all(r.config["seeds"] == 1 for r in table_rows("table2", scale=30))


def test_generation_scaling():
    rows = table_rows("table6", t_scale=0.01)
    assert rows[0].config["T"] == [100]
    assert table_rows("table4", t_scale=1e-6)[0].config["T"] == [2]


def test_four_player_social_rows_carry_a_note():
    for table in ("table5", "table6"):
        for spec in table_rows(table):
            if spec.config["model"] in ("linear4", "poly4", "radical4"):
                assert "above q_hat" in spec.note
            else:
                assert spec.note is None
    assert all(spec.note is None for spec in table_rows("table4"))


def test_unknown_table():
    with pytest.raises(ConfigurationError):
        table_rows("table7")


def test_row_filter_without_match(tmp_path):
    with pytest.raises(ConfigurationError):
        replicate("table4", TraceStore(str(tmp_path)), rows=["nothing"], progress=False)


def test_shortened_row_runs_end_to_end(tmp_path):
    store = TraceStore(str(tmp_path))
    report = replicate("table4", store, t_scale=0.005, rows=["pm0.001"], workers=1, progress=False)
    assert report.table == "table4"
    assert [row.label for row in report.rows] == ["table4_pm0.001"]
    names = [check.name for check in report.rows[0].checks]
    assert names == ["freq(S0)", "freq(S2) + freq(S3)"]
    data = report.to_dict()
    assert data["passed"] == report.passed
    assert data["rows"][0]["note"] is None
    assert len(store.labels()) == 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__]))
