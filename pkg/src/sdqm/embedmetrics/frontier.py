"""Divergence-frontier scores over a quantized embedding pair.

The frontier is traced by mixing the two cluster histograms: for each
mixture weight the two KL divergences toward the mixture give one curve
point after exponential scaling. The area under that curve is the
frontier-area score; the grid mean of the averaged divergences, rescaled
by its value on disjoint one-hot histograms, is the frontier integral.
Starred variants rerun both on add-half smoothed cluster counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .quantize import QuantizedPair

DEFAULT_SCALING = 5.0
DEFAULT_GRID_SIZE = 100


@dataclass(frozen=True)
class FrontierScores:
    mauve: float
    mauve_star: float
    fi: float
    fi_star: float

    def __post_init__(self) -> None:
        for name in ("mauve", "mauve_star", "fi", "fi_star"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"{name} is not finite: {v}")


def _kl(p: np.ndarray, m: np.ndarray) -> float:
    support = p > 0
    return float(np.sum(p[support] * np.log(p[support] / m[support])))


def _area(xs: np.ndarray, ys: np.ndarray) -> float:
    # x ascending; ties keep the monotone-decreasing path (y descending)
    order = np.lexsort((-ys, xs))
    return float(np.trapezoid(ys[order], xs[order]))


def _frontier_curve(p: np.ndarray, q: np.ndarray, lambdas: np.ndarray):
    kl_p = np.empty(lambdas.size)
    kl_q = np.empty(lambdas.size)
    for i, lam in enumerate(lambdas):
        m = lam * p + (1.0 - lam) * q
        kl_p[i] = _kl(p, m)
        kl_q[i] = _kl(q, m)
    return kl_p, kl_q


def _mauve_fi(p: np.ndarray, q: np.ndarray, c: float, grid_size: int) -> tuple[float, float]:
    lambdas = np.linspace(0.0, 1.0, grid_size + 2)[1:-1]
    kl_p, kl_q = _frontier_curve(p, q, lambdas)

    xs = np.concatenate(([0.0, 1.0], np.exp(-c * kl_q)))
    ys = np.concatenate(([1.0, 0.0], np.exp(-c * kl_p)))
    # trapezoid area both ways; identical up to roundoff for this monotone
    # curve, averaged so argument order cannot matter
    mauve = 0.5 * (_area(xs, ys) + _area(ys, xs))

    raw = float(np.mean(0.5 * (kl_p + kl_q)))
    disjoint = float(np.mean(-0.5 * (np.log(lambdas) + np.log1p(-lambdas))))
    fi = min(max(raw / disjoint, 0.0), 1.0)
    return mauve, fi


def _kt_smooth(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    return (counts + 0.5) / (counts.sum() + 0.5 * counts.size)


def frontier_scores(
    qp: QuantizedPair,
    c: float = DEFAULT_SCALING,
    lambda_grid_size: int = DEFAULT_GRID_SIZE,
) -> FrontierScores:
    """Frontier area and integral, plus their count-smoothed variants."""
    if c <= 0:
        raise ValidationError("scaling constant c must be positive")
    if lambda_grid_size < 2:
        raise ValidationError("lambda grid needs at least 2 points")
    mauve, fi = _mauve_fi(qp.p, qp.q, c, lambda_grid_size)
    p_star = _kt_smooth(qp.real_counts)
    q_star = _kt_smooth(qp.synth_counts)
    mauve_star, fi_star = _mauve_fi(p_star, q_star, c, lambda_grid_size)
    return FrontierScores(mauve=mauve, mauve_star=mauve_star, fi=fi, fi_star=fi_star)
