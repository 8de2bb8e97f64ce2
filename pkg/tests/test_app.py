from __future__ import annotations

import csv
import json
import math

import pytest

from mbgan_cli.app import (
    dump_data,
    frozen_contrast,
    plot_checkpoint,
    resume_run,
    run_config,
    run_experiment,
    run_preset,
    summarize_run,
)
from mbgan_cli.config import CONFIG_ECHO_NAME, write_config
from mbgan_cli.presets import PRESETS, get_preset

from conftest import small_config


def _metrics_rows(run_dir):
    return (run_dir / "metrics.csv").read_text(encoding="utf-8").splitlines()


def test_run_writes_outputs(tmp_path):
    report = run_config(small_config(), tmp_path / "run")
    run_dir = tmp_path / "run"
    assert report.iterations == 40
    assert [r.iteration for r in report.records] == [10, 20, 30, 40]
    assert (run_dir / CONFIG_ECHO_NAME).exists()
    assert (run_dir / "final.mbgn").exists()
    assert (run_dir / "checkpoints" / "iter-00000020.mbgn").exists()
    assert (run_dir / "checkpoints" / "iter-00000040.mbgn").exists()
    assert (run_dir / "plots" / "iter-00000020.svg").exists()
    assert (run_dir / "plots" / "final.svg").exists()
    assert len(_metrics_rows(run_dir)) == 5
    assert not math.isnan(report.cumulative_intra_fid)
    assert report.min_fid <= report.mean_fid


def test_rerun_replaces_stale_metrics(tmp_path):
    run_config(small_config(), tmp_path)
    run_config(small_config(), tmp_path)
    assert len(_metrics_rows(tmp_path)) == 5


def test_config_echo_reproduces_run(tmp_path):
    run_config(small_config(), tmp_path / "first")
    run_experiment(tmp_path / "first" / CONFIG_ECHO_NAME, None, tmp_path / "second")
    assert _metrics_rows(tmp_path / "first") == _metrics_rows(tmp_path / "second")


def test_resume_matches_straight_run(tmp_path):
    config_path = tmp_path / "small.json"
    write_config(config_path, small_config())
    run_experiment(config_path, None, tmp_path / "straight")

    partial = tmp_path / "partial"
    run_experiment(config_path, None, partial, iterations=20)
    resume_run(partial / "checkpoints" / "iter-00000020.mbgn", config_path, iterations=40)

    assert _metrics_rows(partial) == _metrics_rows(tmp_path / "straight")
    assert (partial / "final.mbgn").read_bytes() == (tmp_path / "straight" / "final.mbgn").read_bytes()


def test_resume_uses_stored_seed(tmp_path):
    config_path = tmp_path / "small.json"
    write_config(config_path, small_config(seed=3))
    run_experiment(config_path, 11, tmp_path / "run", iterations=20)
    report = resume_run(tmp_path / "run" / "final.mbgn", config_path, iterations=30)
    assert json.loads((tmp_path / "run" / CONFIG_ECHO_NAME).read_text(encoding="utf-8"))["seed"] == 11
    assert report.iterations == 30


def test_summarize_run(tmp_path):
    run_config(small_config(), tmp_path)
    report = summarize_run(tmp_path)
    assert report.name == "small"
    assert report.iterations == 40
    assert len(report.records) == 4


def test_dump_data_and_plot(tmp_path):
    config_path = tmp_path / "small.json"
    write_config(config_path, small_config())
    path = dump_data(config_path, 25, tmp_path / "real.csv")
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["x", "y"] and len(rows) == 26

    run_config(small_config(iterations=10), tmp_path / "run")
    svg = plot_checkpoint(tmp_path / "run" / "final.mbgn", tmp_path / "final.svg")
    assert svg.read_text(encoding="utf-8").startswith("<?xml")


def test_preset_catalogue():
    assert len(get_preset("static-alpha-sweep").labels) == 11
    assert get_preset("alpha-fn-compare").labels == ["alpha-sigm", "alpha-soft", "alpha-tanh"]
    assert get_preset("beta-sigm-sweep").labels[0] == "beta--3.0"
    assert get_preset(" Discriminator-Sweep ").labels == ["k-1", "k-2", "k-4", "k-8"]
    values = get_preset("toy").config_values("alpha-sigm", seed=4, iterations=7)
    assert values["seed"] == 4 and values["iterations"] == 7 and values["beta_init"] == -1.8
    with pytest.raises(KeyError):
        get_preset("unknown")
    assert "standard-gan" in PRESETS


def test_run_preset_writes_summary(tmp_path):
    report = run_preset("alpha-fn-compare", 0, tmp_path, workers=2, iterations=2)
    assert report.total == 3 and report.success == 3 and report.failed == 0
    for label in ("alpha-sigm", "alpha-soft", "alpha-tanh"):
        assert (tmp_path / label / "final.mbgn").exists()
    with (tmp_path / "summary.csv").open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert [row["run"] for row in rows] == ["alpha-sigm", "alpha-soft", "alpha-tanh"]
    assert (tmp_path / "alpha_evolution.csv").exists()


def test_frozen_contrast_rows():
    rows = frozen_contrast([0.0, 0.5], steps=3, seed=0, n_discriminators=2, batch_size=32)
    assert [row.alpha for row in rows] == [0.0, 0.5]
    assert all(row.spread.per_dim_std.shape == (2,) for row in rows)
    assert all(math.isfinite(row.final_loss) for row in rows)
