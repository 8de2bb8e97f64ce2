from __future__ import annotations

import csv
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .gan.metrics import MetricsRecord

METRICS_FILE_NAME = "metrics.csv"
MODE_SHARES_FILE_NAME = "mode_shares.csv"
METRICS_HEADER = [
    "iteration",
    "alpha",
    "beta",
    "intra_fid",
    "fid_to_real",
    "modes_captured",
    "hq_fraction",
    "g_loss",
    "d_loss_mean",
]


def _fmt(value: float) -> str:
    # repr round-trips a float64 exactly
    return repr(float(value))


def _append_rows(path: Path, header: list[str], rows: Iterable[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    is_new = not path.exists() or path.stat().st_size == 0
    with path.open("a", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if is_new:
            writer.writerow(header)
        writer.writerows(rows)


def append_metrics(run_dir: Path, record: MetricsRecord) -> None:
    _append_rows(
        run_dir / METRICS_FILE_NAME,
        METRICS_HEADER,
        [
            [
                str(record.iteration),
                _fmt(record.alpha),
                _fmt(record.beta),
                _fmt(record.intra_fid),
                _fmt(record.fid_to_real),
                str(record.modes_captured),
                _fmt(record.hq_fraction),
                _fmt(record.g_loss),
                _fmt(record.d_loss_mean),
            ]
        ],
    )
    header = ["iteration"] + [f"share_{i}" for i in range(len(record.per_mode_share))]
    _append_rows(
        run_dir / MODE_SHARES_FILE_NAME,
        header,
        [[str(record.iteration)] + [_fmt(v) for v in record.per_mode_share]],
    )


def truncate_metrics(run_dir: Path, last_iteration: int) -> None:
    """Drop rows recorded after ``last_iteration`` so a resumed run can append cleanly."""
    for name in (METRICS_FILE_NAME, MODE_SHARES_FILE_NAME):
        path = run_dir / name
        if not path.exists():
            continue
        with path.open(encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
        if not rows:
            continue
        kept = [rows[0]] + [row for row in rows[1:] if row and int(row[0]) <= last_iteration]
        tmp = path.with_suffix(path.suffix + ".tmp")
        with tmp.open("w", encoding="utf-8", newline="") as handle:
            csv.writer(handle, lineterminator="\n").writerows(kept)
        tmp.replace(path)


def read_metrics_csv(run_dir: Path) -> list[MetricsRecord]:
    path = run_dir / METRICS_FILE_NAME
    if not path.exists():
        raise FileNotFoundError(f"No {METRICS_FILE_NAME} in {run_dir}")
    shares: dict[int, list[float]] = {}
    shares_path = run_dir / MODE_SHARES_FILE_NAME
    if shares_path.exists():
        with shares_path.open(encoding="utf-8", newline="") as handle:
            for row in csv.DictReader(handle):
                iteration = int(row.pop("iteration"))
                shares[iteration] = [float(v) for v in row.values()]

    records: list[MetricsRecord] = []
    with path.open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            iteration = int(row["iteration"])
            d_mean = float(row["d_loss_mean"])
            records.append(
                MetricsRecord(
                    iteration=iteration,
                    alpha=float(row["alpha"]),
                    beta=float(row["beta"]),
                    intra_fid=float(row["intra_fid"]),
                    fid_to_real=float(row["fid_to_real"]),
                    modes_captured=int(row["modes_captured"]),
                    hq_fraction=float(row["hq_fraction"]),
                    g_loss=float(row["g_loss"]),
                    d_losses=[] if np.isnan(d_mean) else [d_mean],
                    per_mode_share=shares.get(iteration, []),
                )
            )
    records.sort(key=lambda r: r.iteration)
    return records


def write_samples_csv(path: Path, samples: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["x", "y"])
        writer.writerows([_fmt(a), _fmt(b)] for a, b in samples)
    return path


def write_table_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    tmp.replace(path)
    return path
