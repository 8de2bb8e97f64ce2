from __future__ import annotations

import math
from pathlib import Path

import numpy as np

VIEW_MIN = -3.0
VIEW_MAX = 3.0
CANVAS_PX = 600
REAL_COLOR = "#d62728"
FAKE_COLOR = "#1f77b4"

PREAMBLE = """\
<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="%(size)d" height="%(size)d" viewBox="%(lo)s %(lo)s %(span)s %(span)s">
<rect x="%(lo)s" y="%(lo)s" width="%(span)s" height="%(span)s" style="fill:#ffffff"/>
"""

POSTAMBLE = """\
</svg>
"""


def _radius(n_points: int) -> float:
    # shrink markers as the cloud gets denser; 512 points -> 0.02 data units
    scale = math.sqrt(512.0 / max(1, n_points))
    return min(0.06, max(0.005, 0.02 * scale))


def _circles(points: np.ndarray, color: str, title: str) -> list[str]:
    if points.size == 0:
        return []
    r = _radius(points.shape[0])
    lines = [f'<g style="fill:{color};fill-opacity:0.6;stroke:none"><title>{title}</title>']
    for x, y in points:
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        # flip y so the plot reads with y pointing up
        lines.append(f'<circle cx="{x:.4f}" cy="{-y:.4f}" r="{r:.4f}"/>')
    lines.append("</g>")
    return lines


def render_scatter_svg(real: np.ndarray, fake: np.ndarray) -> str:
    for name, points in (("real", real), ("fake", fake)):
        if points.size and (points.ndim != 2 or points.shape[1] != 2):
            raise ValueError(f"{name} samples must be a 2-column matrix, got shape {points.shape}")
    span = VIEW_MAX - VIEW_MIN
    parts = [
        PREAMBLE % {"size": CANVAS_PX, "lo": f"{VIEW_MIN:g}", "span": f"{span:g}"},
        *_circles(real.reshape(-1, 2), REAL_COLOR, "real"),
        *_circles(fake.reshape(-1, 2), FAKE_COLOR, "generated"),
        POSTAMBLE,
    ]
    return "\n".join(p.rstrip("\n") for p in parts) + "\n"


def emit_scatter_svg(real: np.ndarray, fake: np.ndarray, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_scatter_svg(real, fake), encoding="utf-8")
    return path
