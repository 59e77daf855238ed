"""
Test Script for the Experiment Harness

Checks grid expansion and seeding, configuration loading with overrides and
line-precise errors, batch execution, artifact layout and reproducibility,
failure capture and trace re-analysis.
"""

import filecmp
import os
import sys

import pandas as pd
import pytest

# Add the project root directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import src.harness.experiment as experiment
from src.harness.experiment import BatchRunner, ExperimentConfig, aggregate_runs, analyze_directory
from src.memory.trace_store import TraceStore, read_json
from src.utils.config import ConfigManager, parse_override
from src.utils.errors import ConfigurationError
from src.utils.seeding import derive_seed


def tiny_config(output_dir, **overrides):
    values = dict(model="linear4", kind="CS", K=[4], p_mut=[0.01], T=[15], L=8, seeds=3, base_seed=5, output_dir=str(output_dir))
    values.update(overrides)
    return ExperimentConfig(**values)


def test_grid_expansion():
    config = ExperimentConfig(model="poly4", kind="VS", K=[20, 40], p_mut=[0.001, 0.0005], T=10, seeds=2)
    points = config.expand()
    assert len(points) == 4
    assert [p.label for p in points] == [
        "poly4_VS_K20_pm0.001_T10_gr50",
        "poly4_VS_K20_pm0.0005_T10_gr50",
        "poly4_VS_K40_pm0.001_T10_gr50",
        "poly4_VS_K40_pm0.0005_T10_gr50",
    ]
    assert all(len(p.runs) == 2 for p in points)
    assert points[3].runs[1].seed == derive_seed(0, 3, 1)
    assert points[3].runs[1].L == 20


def test_coevolution_ignores_ga_rate():
    config = ExperimentConfig(model="poly4", kind="CP", ga_rate=[10, 50], T=10, seeds=1)
    points = config.expand()
    assert len(points) == 1
    assert points[0].label == "poly4_CP_K40_pm0.00025_T10"
    assert points[0].runs[0].ga_rate is None


def test_derived_seeds_are_distinct_and_stable():
    seeds = {derive_seed(7, g, r) for g in range(10) for r in range(30)}
    assert len(seeds) == 300
    assert derive_seed(7, 2, 3) == derive_seed(7, 2, 3)
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_config_dump_and_reload(tmp_path):
    manager = ConfigManager()
    config = tiny_config(tmp_path, p_mut=[0.001, 0.0005], label="demo")
    path = str(tmp_path / "config.yaml")
    manager.save(config, path)
    assert manager.load(path) == config


def test_config_error_names_line():
    text = "model: poly4\nkind: VS\nseeds: 0\n"
    with pytest.raises(ConfigurationError) as excinfo:
        ConfigManager().load_text(text, source="bad.yaml")
    assert excinfo.value.line == 3
    assert "line 3" in str(excinfo.value)


def test_invalid_grid_point_names_its_key():
    text = "model: poly4\nkind: VI\nK: 21\nT: 5\nseeds: 1\n"
    with pytest.raises(ConfigurationError) as excinfo:
        ConfigManager().load_text(text)
    assert excinfo.value.key == "K"
    assert excinfo.value.line == 3


def test_custom_model_without_equilibrium_is_a_config_error():
    # marginal cost above the demand intercept: no firm produces
    text = "kind: CS\nT: 5\nseeds: 2\ncustom_model:\n  kind: linear\n  a: 50\n  b: 1\n  x: 60\n  n: 2\n"
    with pytest.raises(ConfigurationError) as excinfo:
        ConfigManager().load_text(text, source="market.yaml")
    assert excinfo.value.key == "custom_model"
    assert excinfo.value.line == 4


def test_custom_model_is_solved_once_per_config(tmp_path):
    text = "kind: CS\nK: 4\nT: 3\nL: 8\nseeds: 2\ncustom_model:\n  kind: linear\n  a: 100\n  b: 1\n  x: 10\n  n: 2\n"
    config = ConfigManager().load_text(text, overrides=[f"output_dir={tmp_path}"])
    runs = config.expand()[0].runs
    assert len(runs) == 2
    assert runs[0].custom_model is runs[1].custom_model
    report = BatchRunner(config, TraceStore(config.output_dir), workers=1, progress=False).run()[0]
    assert report.failures == []
    assert report.q_hat == pytest.approx(30.0)


def test_overrides_and_unknown_keys(tmp_path):
    manager = ConfigManager()
    config = manager.load_text(
        "model: poly4\nkind: CS\nT: 5\nseeds: 2\n", overrides=["p_mut=1e-3", "K=[4, 8]", f"output_dir={tmp_path}"]
    )
    assert config.p_mut == [0.001]
    assert config.K == [4, 8]
    assert config.output_dir == str(tmp_path)
    with pytest.raises(ConfigurationError) as excinfo:
        manager.load_text("model: poly4\ncolour: red\n")
    assert excinfo.value.line == 2
    with pytest.raises(ConfigurationError):
        parse_override("seeds")


def test_malformed_yaml():
    with pytest.raises(ConfigurationError) as excinfo:
        ConfigManager().load_text("model: poly4\nK: [4, 8\n")
    assert excinfo.value.line is not None


def test_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("COURNOT_GA_OUTPUT_DIR", str(tmp_path / "env"))
    config = ConfigManager().load_text("model: poly4\nT: 5\nseeds: 1\n")
    assert config.output_dir == str(tmp_path / "env")


def test_batch_writes_artifacts(tmp_path):
    config = tiny_config(tmp_path)
    store = TraceStore(config.output_dir)
    reports = BatchRunner(config, store, workers=1, progress=False).run()
    assert len(reports) == 1
    label = reports[0].label
    assert len(store.trace_files(label)) == 3
    assert len(os.listdir(os.path.join(store.grid_dir(label), "stats"))) == 3

    report = store.read_report(label)
    assert report["aggregates"]["runs"] == 3
    assert report["failures"] == []
    assert [r["seed"] for r in report["runs"]] == sorted(r["seed"] for r in report["runs"])
    assert report["verdicts"]["runs"] == 3

    frame = pd.read_csv(store.timeseries_path(label))
    assert frame.columns[0] == "seed"
    assert len(frame) == 3 * 15


def test_same_config_reproduces_bytes(tmp_path):
    stores = []
    for name in ("a", "b"):
        config = tiny_config(tmp_path / name)
        store = TraceStore(config.output_dir)
        BatchRunner(config, store, workers=1, progress=False).run()
        stores.append(store)
    label = tiny_config(tmp_path / "a").expand()[0].label
    for path in stores[0].trace_files(label):
        seed = int(os.path.basename(path)[5:-6])
        assert filecmp.cmp(stores[0].stats_path(label, seed), stores[1].stats_path(label, seed), shallow=False)
        assert filecmp.cmp(path, stores[1].trace_path(label, seed), shallow=False)
    assert filecmp.cmp(stores[0].report_path(label), stores[1].report_path(label), shallow=False)


def test_failed_run_is_recorded(tmp_path, monkeypatch):
    config = tiny_config(tmp_path)
    failing_seed = config.expand()[0].runs[1].seed
    real_run = experiment.run_simulation

    def flaky(params, sink=None):
        if params.seed == failing_seed:
            raise RuntimeError("worker crashed")
        return real_run(params, sink=sink)

    monkeypatch.setattr(experiment, "run_simulation", flaky)
    store = TraceStore(config.output_dir)
    report = BatchRunner(config, store, workers=1, progress=False).run()[0]
    assert report.failures == [{"seed": failing_seed, "error": "RuntimeError: worker crashed"}]
    assert report.aggregates["runs"] == 2
    # no partial trace is left behind, so re-analysis sees the two good runs
    assert not os.path.exists(store.trace_path(report.label, failing_seed))
    assert len(store.trace_files(report.label)) == 2
    assert analyze_directory(store, report.label).aggregates["runs"] == 2


def test_analyze_directory_matches_batch_report(tmp_path):
    config = tiny_config(tmp_path)
    store = TraceStore(config.output_dir)
    original = BatchRunner(config, store, workers=1, progress=False).run()[0]
    rebuilt = analyze_directory(store, original.label)
    assert rebuilt.runs == original.runs
    assert rebuilt.aggregates == original.aggregates
    assert rebuilt.verdicts == original.verdicts
    assert read_json(store.report_path(original.label))["label"] == original.label


def test_aggregates_ignore_completion_order(tmp_path):
    config = tiny_config(tmp_path)
    store = TraceStore(config.output_dir)
    report = BatchRunner(config, store, workers=1, progress=False).run()[0]
    records = list(report.runs)
    assert aggregate_runs(records[::-1]) == aggregate_runs(records)
    assert aggregate_runs([]) == {"runs": 0}


if __name__ == "__main__":
    sys.exit(pytest.main([__file__]))
