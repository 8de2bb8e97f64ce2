from __future__ import annotations

import logging
from pathlib import Path

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .app import (
    RunReport,
    dump_data,
    frozen_contrast,
    plot_checkpoint,
    resume_run,
    run_experiment,
    run_preset,
    summarize_run,
)
from .config import resolve_log_level, resolve_workers
from .gan.metrics import MetricsRecord
from .presets import PRESETS
from .renderer import (
    render_checkpoint,
    render_file_saved,
    render_frozen_table,
    render_run_saved,
    render_summary_table,
)

app = typer.Typer(
    help="mbgan: multi-discriminator GAN experiments on a 2D ring of Gaussians.",
    no_args_is_help=True,
)
console = Console()


@app.callback()
def main() -> None:
    """mbgan root command group."""
    level = resolve_log_level()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _print_checkpoint(label: str, record: MetricsRecord) -> None:
    render_checkpoint(console, label, record)


@app.command("run")
def run(
    config: Path = typer.Argument(..., exists=True, dir_okay=False, resolve_path=True, help="JSON or YAML experiment config."),
    seed: int | None = typer.Option(None, "--seed", help="Override the config seed."),
    out: Path = typer.Option(Path("runs/latest"), "--out", help="Output directory for this run."),
    iterations: int | None = typer.Option(None, "--iterations", min=0, help="Override the iteration count."),
) -> None:
    """Train one configuration and write metrics, plots and checkpoints."""
    try:
        report = run_experiment(config, seed, out.expanduser().resolve(), iterations=iterations, on_checkpoint=_print_checkpoint)
    except Exception as exc:
        console.print(f"[bold red]Error:[/bold red] {exc}")
        raise typer.Exit(code=1) from exc
    render_run_saved(console, report)


@app.command("preset")
def preset(
    name: str = typer.Argument(..., help="Preset name; see `mbgan presets`."),
    seed: int = typer.Option(0, "--seed", help="Seed shared by every sub-run."),
    out: Path = typer.Option(Path("runs"), "--out", help="Root directory; one sub-directory per sub-run."),
    workers: int | None = typer.Option(None, "--workers", min=1, help="Sub-runs trained in parallel (env MBGAN_WORKERS)."),
    iterations: int | None = typer.Option(None, "--iterations", min=0, help="Override the iteration count of every sub-run."),
) -> None:
    """Run a preset experiment suite."""
    try:
        root = out.expanduser().resolve()
        console.print(f"[cyan]Preset[/cyan] {name}, seed={seed}, output='{root}'")

        def _progress(status: str, label: str, result: RunReport | Exception) -> None:
            if status == "done":
                console.print(f"[green]finished[/green] {label}")
            else:
                console.print(f"[red]failed[/red] {label}: {result}")

        report = run_preset(
            name,
            seed,
            root,
            workers=resolve_workers(workers),
            iterations=iterations,
            on_checkpoint=_print_checkpoint,
            on_progress=_progress,
        )
    except Exception as exc:
        console.print(f"[bold red]Error:[/bold red] {exc}")
        raise typer.Exit(code=1) from exc

    render_summary_table(console, f"Preset {report.name}", report.runs)
    console.print(
        f"[bold green]Preset done.[/bold green] total={report.total}, success={report.success}, failed={report.failed}"
    )
    if report.failed:
        raise typer.Exit(code=1)


@app.command("presets")
def presets() -> None:
    """List the available preset suites."""
    table = Table(title="Presets")
    table.add_column("name")
    table.add_column("runs", justify="right")
    table.add_column("description")
    for item in PRESETS.values():
        table.add_row(item.name, str(len(item.variants)), item.description)
    console.print(table)


@app.command("resume")
def resume(
    checkpoint: Path = typer.Argument(..., exists=True, dir_okay=False, resolve_path=True),
    config: Path = typer.Argument(..., exists=True, dir_okay=False, resolve_path=True),
    out: Path | None = typer.Option(None, "--out", help="Run directory; defaults to the checkpoint's run."),
    iterations: int | None = typer.Option(None, "--iterations", min=0, help="Override the target iteration."),
) -> None:
    """Continue a run from a checkpoint."""
    try:
        report = resume_run(
            checkpoint,
            config,
            out_dir=out.expanduser().resolve() if out else None,
            iterations=iterations,
            on_checkpoint=_print_checkpoint,
        )
    except Exception as exc:
        console.print(f"[bold red]Error:[/bold red] {exc}")
        raise typer.Exit(code=1) from exc
    render_run_saved(console, report)


@app.command("dump-data")
def dump_data_command(
    config: Path = typer.Argument(..., exists=True, dir_okay=False, resolve_path=True),
    n: int = typer.Option(1000, "--n", min=1, help="Number of real samples."),
    out: Path = typer.Option(Path("real.csv"), "--out", help="CSV destination."),
    seed: int | None = typer.Option(None, "--seed", help="Override the config seed."),
) -> None:
    """Write samples of the real ring mixture to CSV."""
    try:
        path = dump_data(config, n, out.expanduser().resolve(), seed=seed)
    except Exception as exc:
        console.print(f"[bold red]Error:[/bold red] {exc}")
        raise typer.Exit(code=1) from exc
    render_file_saved(console, f"{n} real samples", path)


@app.command("plot")
def plot(
    checkpoint: Path = typer.Argument(..., exists=True, dir_okay=False, resolve_path=True),
    out: Path = typer.Option(Path("samples.svg"), "--out", help="SVG destination."),
) -> None:
    """Render real vs generated samples of a checkpoint as SVG."""
    try:
        path = plot_checkpoint(checkpoint, out.expanduser().resolve())
    except Exception as exc:
        console.print(f"[bold red]Error:[/bold red] {exc}")
        raise typer.Exit(code=1) from exc
    render_file_saved(console, "scatter plot", path)


@app.command("summarize")
def summarize(
    run_dir: Path = typer.Argument(..., exists=True, file_okay=False, resolve_path=True),
) -> None:
    """Summarize the metrics of a finished run directory."""
    try:
        report = summarize_run(run_dir)
    except Exception as exc:
        console.print(f"[bold red]Error:[/bold red] {exc}")
        raise typer.Exit(code=1) from exc
    render_run_saved(console, report)


@app.command("frozen")
def frozen(
    alpha: list[float] = typer.Option([0.0, 0.5], "--alpha", help="Alpha values to contrast (repeatable)."),
    steps: int = typer.Option(2000, "--steps", min=0, help="Generator-only steps."),
    seed: int = typer.Option(0, "--seed"),
    discriminators: int = typer.Option(8, "--discriminators", "-k", min=1),
    batch_size: int = typer.Option(512, "--batch-size", min=1),
) -> None:
    """Train G alone against frozen discriminators and compare output spread.

    The frozen discriminators are not randomly initialized networks: each is a
    hand-built smooth bump whose single maximum sits near the origin, so that
    every discriminator has one well-defined most-real point to collapse onto.
    """
    try:
        rows = frozen_contrast(alpha, steps=steps, seed=seed, n_discriminators=discriminators, batch_size=batch_size)
    except Exception as exc:
        console.print(f"[bold red]Error:[/bold red] {exc}")
        raise typer.Exit(code=1) from exc
    render_frozen_table(console, rows)


if __name__ == "__main__":
    app()
