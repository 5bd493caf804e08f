"""Joint k-means quantization of real and synthetic embeddings."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..dataio import EmbeddingSet
from ..errors import ValidationError

_MASS_TOL = 1e-9


@dataclass(frozen=True)
class QuantizedPair:
    """Cluster-occupancy histograms of a jointly quantized embedding pair.

    ``k`` is the effective cluster count (clusters that ended up empty are
    dropped, which can push it below the requested value on degenerate
    data). ``real_counts``/``synth_counts`` keep the raw occupancies so
    smoothed variants can be derived later.
    """

    k: int
    p: np.ndarray
    q: np.ndarray
    centroids: np.ndarray
    real_counts: np.ndarray
    synth_counts: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        if self.k < 1 or p.size != self.k or q.size != self.k:
            raise ValidationError("mass vectors must have length k >= 1")
        if abs(p.sum() - 1.0) > _MASS_TOL or abs(q.sum() - 1.0) > _MASS_TOL:
            raise ValidationError("cluster masses must each sum to 1")
        for arr in (p, q):
            arr.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


def default_k(n_joint: int) -> int:
    """Quantization cluster count: min(16, floor(sqrt(n/2))), at least 2."""
    return max(2, min(16, int(np.sqrt(n_joint / 2.0))))


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding.

    Returns (centroids, labels). Duplicate-heavy inputs can yield fewer
    than ``k`` centroids: initialization stops early when no point has
    positive distance to the chosen centers, and clusters that lose all
    members are dropped. Deterministic for a given seed, and invariant
    to input row order (points are canonically sorted internally, so the
    same multiset always produces the same clustering).
    """
    original = np.asarray(points, dtype=np.float64)
    n = original.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} outside [1, {n}]")
    order = np.lexsort(original.T[::-1])
    pts = original[order]
    rng = np.random.default_rng(seed)

    centers = [pts[rng.integers(n)]]
    sq = np.sum((pts - centers[0]) ** 2, axis=1)
    while len(centers) < k:
        total = sq.sum()
        if total <= 0.0:
            break  # no point distinct from current centers
        probs = sq / total
        idx = rng.choice(n, p=probs)
        centers.append(pts[idx])
        sq = np.minimum(sq, np.sum((pts - centers[-1]) ** 2, axis=1))
    centroids = np.array(centers)

    prev_labels = None
    labels = np.zeros(n, dtype=np.intp)
    for _ in range(max_iter):
        d = (
            np.sum(pts**2, axis=1)[:, None]
            - 2.0 * pts @ centroids.T
            + np.sum(centroids**2, axis=1)[None, :]
        )
        labels = np.argmin(d, axis=1)
        occupied = np.unique(labels)
        if occupied.size < centroids.shape[0]:
            # re-index onto surviving clusters only
            remap = np.full(centroids.shape[0], -1, dtype=np.intp)
            remap[occupied] = np.arange(occupied.size)
            labels = remap[labels]
        centroids = np.stack(
            [pts[labels == i].mean(axis=0) for i in range(occupied.size)]
        )
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        prev_labels = labels
    unsorted_labels = np.empty(n, dtype=np.intp)
    unsorted_labels[order] = labels
    return centroids, unsorted_labels


def quantize(real: EmbeddingSet, synth: EmbeddingSet, k: int, seed: int) -> QuantizedPair:
    """Cluster the joint embedding set and histogram each source over clusters."""
    if real.dim != synth.dim:
        raise ValidationError("embedding sets must share dimensionality")
    joint = np.vstack([real.rows, synth.rows]).astype(np.float64)
    if k > joint.shape[0]:
        raise ValidationError(
            f"k={k} exceeds joint embedding count {joint.shape[0]}"
        )
    if k < 2:
        raise ValidationError("quantization requires k >= 2")
    centroids, labels = kmeans(joint, k, seed)
    k_eff = centroids.shape[0]
    if k_eff < k:
        warnings.warn(
            f"degenerate embeddings: quantized into {k_eff} clusters instead of {k}",
            stacklevel=2,
        )
    n_real = len(real)
    real_counts = np.bincount(labels[:n_real], minlength=k_eff).astype(np.int64)
    synth_counts = np.bincount(labels[n_real:], minlength=k_eff).astype(np.int64)
    return QuantizedPair(
        k=k_eff,
        p=real_counts / real_counts.sum(),
        q=synth_counts / synth_counts.sum(),
        centroids=centroids,
        real_counts=real_counts,
        synth_counts=synth_counts,
    )
