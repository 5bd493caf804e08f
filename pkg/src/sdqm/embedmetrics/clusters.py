"""Log cluster metric: squared deviation of per-cluster real proportions."""

from __future__ import annotations

import numpy as np

from ..dataio import EmbeddingSet
from ..errors import ValidationError
from .quantize import kmeans

LOG_CLUSTER_EPS = 1e-12
DEFAULT_CLUSTERS = 10


def log_cluster_components(
    real: EmbeddingSet, synth: EmbeddingSet, k: int = DEFAULT_CLUSTERS, seed: int = 0
) -> tuple[float, float, int]:
    """Raw mean squared proportion deviation, its log, and effective k.

    Jointly clusters both embedding sets; for each cluster the real-point
    share is compared against the global real share, squared, and
    averaged. Empty clusters are dropped by the clustering step, so the
    mean runs over the effective cluster count. The log is clamped at
    ``LOG_CLUSTER_EPS`` to keep perfectly proportional splits finite.
    """
    if real.dim != synth.dim:
        raise ValidationError("embedding sets must share dimensionality")
    joint = np.vstack([real.rows, synth.rows]).astype(np.float64)
    if not 2 <= k <= joint.shape[0]:
        raise ValidationError(f"k={k} outside [2, {joint.shape[0]}]")
    _, labels = kmeans(joint, k, seed)
    k_eff = int(labels.max()) + 1

    n_real = len(real)
    global_share = n_real / joint.shape[0]
    totals = np.bincount(labels, minlength=k_eff)
    reals = np.bincount(labels[:n_real], minlength=k_eff)
    c = float(np.mean((reals / totals - global_share) ** 2))
    l = float(np.log(max(c, LOG_CLUSTER_EPS)))
    return c, l, k_eff


def log_cluster(
    real: EmbeddingSet, synth: EmbeddingSet, k: int = DEFAULT_CLUSTERS, seed: int = 0
) -> float:
    """Log of the mean squared real-proportion deviation over joint clusters."""
    _, l, _ = log_cluster_components(real, synth, k=k, seed=seed)
    return l
