from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .gan.metrics import MetricsRecord

if TYPE_CHECKING:
    from .app import FrozenRow, RunReport


def _num(value: float, digits: int = 4) -> str:
    return "nan" if value != value else f"{value:.{digits}f}"


def render_checkpoint(console: Console, label: str, record: MetricsRecord) -> None:
    console.print(
        f"[dim]{label}[/dim] iter={record.iteration} alpha={_num(record.alpha)} "
        f"modes={record.modes_captured} hq={_num(record.hq_fraction, 3)} "
        f"intra_fid={_num(record.intra_fid, 5)} fid={_num(record.fid_to_real)}"
    )


def render_run_saved(console: Console, report: RunReport) -> None:
    final = report.final
    coverage = (
        f"Modes captured: {final.modes_captured}, hq fraction: {_num(final.hq_fraction, 3)}\n"
        f"Final alpha: {_num(final.alpha)}\n"
        if final is not None
        else "No checkpoint evaluated\n"
    )
    console.print(
        Panel.fit(
            f"[bold]{report.name}[/bold] ({report.iterations} iterations)\n"
            f"{coverage}"
            f"Cumulative Intra FID: {_num(report.cumulative_intra_fid, 5)}\n"
            f"Mean / Min FID: {_num(report.mean_fid)} / {_num(report.min_fid)}\n"
            f"Cumulative mode entropy: {_num(report.cumulative_mode_entropy)}\n"
            f"Output: {report.run_dir}",
            title="Run Saved",
            border_style="green",
        )
    )


def render_summary_table(console: Console, title: str, reports: Sequence[RunReport]) -> None:
    table = Table(title=title)
    for column in ("run", "modes", "hq", "alpha", "cum. intra FID", "mean FID", "min FID", "cum. entropy"):
        table.add_column(column, justify="right" if column != "run" else "left")
    for report in reports:
        final = report.final
        table.add_row(
            report.label,
            str(final.modes_captured) if final else "-",
            _num(final.hq_fraction, 3) if final else "-",
            _num(final.alpha) if final else "-",
            _num(report.cumulative_intra_fid, 5),
            _num(report.mean_fid),
            _num(report.min_fid),
            _num(report.cumulative_mode_entropy),
        )
    console.print(table)


def render_frozen_table(console: Console, rows: Sequence[FrozenRow]) -> None:
    table = Table(title="Generator trained against frozen discriminators")
    for column in ("alpha", "std x", "std y", "mean pairwise distance", "final loss"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(
            _num(row.alpha, 3),
            _num(float(row.spread.per_dim_std[0])),
            _num(float(row.spread.per_dim_std[1])),
            _num(row.spread.mean_pairwise_distance),
            _num(row.final_loss),
        )
    console.print(table)


def render_file_saved(console: Console, what: str, path: Path) -> None:
    console.print(f"[green]saved[/green] {what}: {path}")
