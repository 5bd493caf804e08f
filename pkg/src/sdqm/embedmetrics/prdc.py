"""Fidelity, coverage, and novelty scores from embedding geometry.

All three scores are distance-based and therefore invariant under any
orthogonal transform applied to both sets:

* precision: how much of the synthetic set falls inside quantile balls
  around the real center, averaged over ball sizes;
* recall: the mirrored construction, real points inside synthetic balls;
* authenticity: the fraction of synthetic points that sit farther from
  their nearest real neighbor than that neighbor sits from its own
  nearest real neighbor (i.e. are not near-duplicates).

The ``*_score`` functions work on raw row matrices so subset-selection
loops can call them without building full embedding-set objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import EmbeddingSet
from ..errors import ValidationError

QUANTILE_LEVELS = 20


@dataclass(frozen=True)
class PrecisionRecallScores:
    alpha_precision: float
    beta_recall: float
    authenticity: float

    def __post_init__(self) -> None:
        for name in ("alpha_precision", "beta_recall", "authenticity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0, 1]")


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = (
        np.sum(a**2, axis=1)[:, None]
        - 2.0 * a @ b.T
        + np.sum(b**2, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def _ball_coverage(anchor: np.ndarray, other: np.ndarray, levels: int) -> float:
    """Mean fraction of ``other`` inside quantile balls around the mean
    of ``anchor``; ball radii are the (i/levels)-quantiles of anchor
    distances for i = 1..levels."""
    center = anchor.mean(axis=0)
    d_anchor = np.linalg.norm(anchor - center, axis=1)
    d_other = np.linalg.norm(other - center, axis=1)
    qs = np.arange(1, levels + 1) / levels
    radii = np.quantile(d_anchor, qs)
    inside = d_other[None, :] <= radii[:, None]
    return float(inside.mean())


def alpha_precision_score(
    real_rows: np.ndarray, synth_rows: np.ndarray, levels: int = QUANTILE_LEVELS
) -> float:
    """Synthetic mass inside quantile balls around the real center."""
    return _ball_coverage(
        np.asarray(real_rows, dtype=np.float64),
        np.asarray(synth_rows, dtype=np.float64),
        levels,
    )


def beta_recall_score(
    real_rows: np.ndarray, synth_rows: np.ndarray, levels: int = QUANTILE_LEVELS
) -> float:
    """Real mass inside quantile balls around the synthetic center."""
    return _ball_coverage(
        np.asarray(synth_rows, dtype=np.float64),
        np.asarray(real_rows, dtype=np.float64),
        levels,
    )


def authenticity_score(real_rows: np.ndarray, synth_rows: np.ndarray) -> float:
    """Fraction of synthetic points that are not near-duplicates of a
    real point, judged against that real point's own nearest-neighbor
    distance."""
    r = np.asarray(real_rows, dtype=np.float64)
    s = np.asarray(synth_rows, dtype=np.float64)
    if r.shape[0] < 2:
        raise ValidationError("authenticity is undefined for a singleton real set")
    d_sr = np.sqrt(_sq_dists(s, r))
    nearest = np.argmin(d_sr, axis=1)
    d_nearest = d_sr[np.arange(s.shape[0]), nearest]

    d_rr = _sq_dists(r, r)
    np.fill_diagonal(d_rr, np.inf)
    own_nn = np.sqrt(np.min(d_rr, axis=1))
    return float(np.mean(d_nearest > own_nn[nearest]))


def precision_recall_authenticity(
    real: EmbeddingSet, synth: EmbeddingSet, levels: int = QUANTILE_LEVELS
) -> PrecisionRecallScores:
    """Precision/recall/authenticity for a real-synthetic embedding pair."""
    if real.dim != synth.dim:
        raise ValidationError("embedding sets must share dimensionality")
    r = real.rows.astype(np.float64)
    s = synth.rows.astype(np.float64)
    return PrecisionRecallScores(
        alpha_precision=alpha_precision_score(r, s, levels),
        beta_recall=beta_recall_score(r, s, levels),
        authenticity=authenticity_score(r, s),
    )
