from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
from typing import Callable, Sequence

from .checkpoint import load_checkpoint, restore_state, save_checkpoint
from .config import CONFIG_ECHO_NAME, config_from_mapping, load_config, write_config
from .gan.metrics import (
    EmptySequence,
    MetricsRecord,
    cumulative_intra_fid,
    cumulative_mode_entropy,
    mean_min_fid,
)
from .gan.synthdata import sample_real, seeded_rng
from .gan.trainer import (
    OutputSpread,
    TrainConfig,
    TrainState,
    frozen_d_g_training,
    generate,
    init_state,
    peaked_discriminator,
    real_reference,
    train,
)
from .presets import get_preset
from .svgplot import emit_scatter_svg
from .writer import append_metrics, read_metrics_csv, truncate_metrics, write_samples_csv, write_table_csv

LOGGER = logging.getLogger(__name__)

PLOT_POINTS = 512
_PLOT_STREAM = 3
_FROZEN_D_STREAM = 7

CheckpointCallback = Callable[[str, MetricsRecord], None]


@dataclass(slots=True)
class RunReport:
    name: str
    label: str
    run_dir: Path
    iterations: int
    records: list[MetricsRecord] = field(default_factory=list)
    cumulative_intra_fid: float = math.nan
    mean_fid: float = math.nan
    min_fid: float = math.nan
    cumulative_mode_entropy: float = math.nan

    @property
    def final(self) -> MetricsRecord | None:
        return self.records[-1] if self.records else None


@dataclass(slots=True)
class PresetReport:
    name: str
    total: int
    success: int
    failed: int
    runs: list[RunReport] = field(default_factory=list)


@dataclass(slots=True)
class FrozenRow:
    alpha: float
    spread: OutputSpread
    final_loss: float


def summarize_records(name: str, label: str, run_dir: Path, iterations: int, records: list[MetricsRecord]) -> RunReport:
    report = RunReport(name=name, label=label, run_dir=run_dir, iterations=iterations, records=records)
    report.cumulative_intra_fid = cumulative_intra_fid(records)
    report.cumulative_mode_entropy = cumulative_mode_entropy(records)
    try:
        report.mean_fid, report.min_fid = mean_min_fid(records)
    except EmptySequence:
        LOGGER.debug("No FID values recorded in %s", run_dir)
    return report


def summarize_run(run_dir: Path) -> RunReport:
    records = read_metrics_csv(run_dir)
    echo = run_dir / CONFIG_ECHO_NAME
    name = load_config(echo).name if echo.exists() else run_dir.name
    last = records[-1].iteration if records else 0
    return summarize_records(name, run_dir.name, run_dir, last, records)


def plot_state(state: TrainState, path: Path) -> Path:
    cfg = state.config
    rng = seeded_rng(cfg.seed, _PLOT_STREAM, state.iteration)
    fake = generate(state.g_params, cfg.latent_dim, PLOT_POINTS, rng)
    real = real_reference(cfg)[:PLOT_POINTS]
    return emit_scatter_svg(real, fake, path)


def _drive(
    state: TrainState,
    run_dir: Path,
    label: str,
    on_checkpoint: CheckpointCallback | None,
) -> RunReport:
    cfg = state.config
    checkpoints_dir = run_dir / "checkpoints"
    plots_dir = run_dir / "plots"

    def _on_iteration(current: TrainState) -> None:
        if current.iteration % cfg.save_every == 0:
            save_checkpoint(checkpoints_dir / f"iter-{current.iteration:08d}.mbgn", current)
        if current.iteration % cfg.plot_every == 0:
            plot_state(current, plots_dir / f"iter-{current.iteration:08d}.svg")

    def _on_checkpoint(current: TrainState, record: MetricsRecord) -> None:
        append_metrics(run_dir, record)
        if on_checkpoint is not None:
            on_checkpoint(label, record)

    train(state, cfg.iterations, on_checkpoint=_on_checkpoint, on_iteration=_on_iteration)
    save_checkpoint(run_dir / "final.mbgn", state)
    plot_state(state, plots_dir / "final.svg")

    records = read_metrics_csv(run_dir) if (run_dir / "metrics.csv").exists() else []
    return summarize_records(cfg.name, label, run_dir, state.iteration, records)


def run_config(
    config: TrainConfig,
    out_dir: Path,
    *,
    label: str | None = None,
    on_checkpoint: CheckpointCallback | None = None,
) -> RunReport:
    out_dir.mkdir(parents=True, exist_ok=True)
    for stale in ("metrics.csv", "mode_shares.csv"):
        (out_dir / stale).unlink(missing_ok=True)
    write_config(out_dir / CONFIG_ECHO_NAME, config)
    LOGGER.info("Starting run %s in %s", config.name, out_dir)
    state = init_state(config)
    return _drive(state, out_dir, label or config.name, on_checkpoint)


def run_experiment(
    config_path: Path,
    seed: int | None,
    out_dir: Path,
    *,
    iterations: int | None = None,
    on_checkpoint: CheckpointCallback | None = None,
) -> RunReport:
    config = load_config(config_path, cli_seed=seed, cli_iterations=iterations)
    return run_config(config, out_dir, on_checkpoint=on_checkpoint)


def resume_run(
    checkpoint_path: Path,
    config_path: Path,
    *,
    out_dir: Path | None = None,
    iterations: int | None = None,
    on_checkpoint: CheckpointCallback | None = None,
) -> RunReport:
    checkpoint = load_checkpoint(checkpoint_path)
    stored_seed = int(checkpoint.config_values.get("seed", 0))
    config = load_config(config_path, cli_seed=stored_seed, cli_iterations=iterations)
    state = restore_state(checkpoint, config)

    run_dir = out_dir or _run_dir_of(checkpoint_path)
    run_dir.mkdir(parents=True, exist_ok=True)
    truncate_metrics(run_dir, state.iteration)
    write_config(run_dir / CONFIG_ECHO_NAME, config)
    LOGGER.info("Resuming %s from iteration %d into %s", config.name, state.iteration, run_dir)
    return _drive(state, run_dir, config.name, on_checkpoint)


def _run_dir_of(checkpoint_path: Path) -> Path:
    parent = checkpoint_path.resolve().parent
    return parent.parent if parent.name == "checkpoints" else parent


def run_preset(
    name: str,
    seed: int,
    out_dir: Path,
    *,
    workers: int = 1,
    iterations: int | None = None,
    on_checkpoint: CheckpointCallback | None = None,
    on_progress: Callable[[str, str, RunReport | Exception], None] | None = None,
) -> PresetReport:
    preset = get_preset(name)
    configs = {
        label: config_from_mapping(preset.config_values(label, seed, iterations))
        for label in preset.labels
    }
    report = PresetReport(name=preset.name, total=len(configs), success=0, failed=0)
    finished: dict[str, RunReport] = {}

    max_workers = min(max(1, workers), len(configs))
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_label = {
            executor.submit(run_config, cfg, out_dir / label, label=label, on_checkpoint=on_checkpoint): label
            for label, cfg in configs.items()
        }
        for future in as_completed(future_to_label):
            label = future_to_label[future]
            try:
                result = future.result()
            except Exception as exc:
                report.failed += 1
                LOGGER.error("Sub-run %s failed: %s", label, exc)
                if on_progress:
                    on_progress("failed", label, exc)
                continue
            report.success += 1
            finished[label] = result
            if on_progress:
                on_progress("done", label, result)

    report.runs = [finished[label] for label in preset.labels if label in finished]
    write_preset_summary(out_dir, report.runs)
    if preset.alpha_evolution:
        write_alpha_evolution(out_dir, report.runs)
    return report


def write_preset_summary(out_dir: Path, runs: Sequence[RunReport]) -> Path:
    rows = []
    for run in runs:
        final = run.final
        rows.append(
            [
                run.label,
                run.cumulative_intra_fid,
                run.mean_fid,
                run.min_fid,
                run.cumulative_mode_entropy,
                final.modes_captured if final else "",
                final.hq_fraction if final else math.nan,
                final.alpha if final else math.nan,
            ]
        )
    return write_table_csv(
        out_dir / "summary.csv",
        [
            "run",
            "cumulative_intra_fid",
            "mean_fid",
            "min_fid",
            "cumulative_mode_entropy",
            "final_modes_captured",
            "final_hq_fraction",
            "final_alpha",
        ],
        rows,
    )


def write_alpha_evolution(out_dir: Path, runs: Sequence[RunReport]) -> Path:
    iterations = sorted({r.iteration for run in runs for r in run.records})
    by_run = [{r.iteration: r.alpha for r in run.records} for run in runs]
    rows = [[it] + [alphas.get(it, math.nan) for alphas in by_run] for it in iterations]
    return write_table_csv(out_dir / "alpha_evolution.csv", ["iteration"] + [run.label for run in runs], rows)


def dump_data(config_path: Path, n: int, out_path: Path, seed: int | None = None) -> Path:
    config = load_config(config_path, cli_seed=seed)
    rng = seeded_rng(config.seed)
    return write_samples_csv(out_path, sample_real(config.mixture(), n, rng))


def plot_checkpoint(checkpoint_path: Path, out_path: Path) -> Path:
    checkpoint = load_checkpoint(checkpoint_path)
    config = config_from_mapping(checkpoint.config_values)
    state = restore_state(checkpoint, config)
    return plot_state(state, out_path)


def frozen_contrast(
    alphas: Sequence[float],
    *,
    steps: int,
    seed: int,
    n_discriminators: int = 8,
    batch_size: int = 512,
) -> list[FrozenRow]:
    """Train fresh generators (same seed) against one fixed set of peaked discriminators."""
    d_rng = seeded_rng(seed, _FROZEN_D_STREAM)
    frozen = [
        peaked_discriminator(d_rng.normal(0.0, 0.1, size=2), d_rng)
        for _ in range(n_discriminators)
    ]
    rows: list[FrozenRow] = []
    for alpha in alphas:
        result = frozen_d_g_training(frozen, alpha, steps, seed, batch_size=batch_size)
        rows.append(FrozenRow(alpha=alpha, spread=result.spread, final_loss=result.final_loss))
    return rows
