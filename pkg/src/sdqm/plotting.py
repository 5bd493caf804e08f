"""Deterministic SVG scatter output for prediction-vs-label data."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ValidationError

_WIDTH = 640
_HEIGHT = 480
_MARGIN = 56


def _axis_range(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def scatter_svg(
    predictions,
    labels,
    pearson: float,
    spearman: float,
    path: str | Path,
    title: str = "SDQM vs detector score",
) -> None:
    """Write a scatter plot with a least-squares reference line.

    Output bytes are a pure function of the inputs: coordinates are
    formatted at fixed precision and no timestamps or random ids are
    embedded.
    """
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size != y.size or p.size == 0:
        raise ValidationError("predictions and labels must be nonempty and equal length")

    x_lo, x_hi = _axis_range(p)
    y_lo, y_hi = _axis_range(y)

    def sx(v: float) -> float:
        return _MARGIN + (v - x_lo) / (x_hi - x_lo) * (_WIDTH - 2 * _MARGIN)

    def sy(v: float) -> float:
        return _HEIGHT - _MARGIN - (v - y_lo) / (y_hi - y_lo) * (_HEIGHT - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_WIDTH - 2 * _MARGIN}" '
        f'height="{_HEIGHT - 2 * _MARGIN}" fill="none" stroke="black"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
        f'<text x="{_WIDTH / 2:.1f}" y="42" text-anchor="middle" '
        f'font-family="monospace" font-size="12">'
        f"pearson={pearson:.3f} spearman={spearman:.3f}</text>",
    ]

    if p.size >= 2 and np.ptp(p) > 0:
        slope, intercept = np.polyfit(p, y, 1)
        x0, x1 = x_lo, x_hi
        parts.append(
            f'<line x1="{sx(x0):.2f}" y1="{sy(slope * x0 + intercept):.2f}" '
            f'x2="{sx(x1):.2f}" y2="{sy(slope * x1 + intercept):.2f}" '
            f'stroke="#888888" stroke-dasharray="4 3"/>'
        )

    for xi, yi in zip(p, y):
        parts.append(
            f'<circle cx="{sx(xi):.2f}" cy="{sy(yi):.2f}" r="3" '
            f'fill="#1f6fb2" fill-opacity="0.8"/>'
        )

    parts.append(
        f'<text x="{_WIDTH / 2:.1f}" y="{_HEIGHT - 16}" text-anchor="middle" '
        f'font-family="monospace" font-size="12">predicted score</text>'
    )
    parts.append(
        f'<text x="18" y="{_HEIGHT / 2:.1f}" text-anchor="middle" '
        f'font-family="monospace" font-size="12" '
        f'transform="rotate(-90 18 {_HEIGHT / 2:.1f})">detector score</text>'
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
