"""Annotation- and pixel-level sub-metrics.

Covers four comparisons between a real and a synthetic dataset:

* spatial distribution: object-coverage heatmaps on a shared working
  canvas, mean-pooled 8x8, compared by RMSE;
* bounding-box match: aspect ratio, normalized diagonal, and normalized
  area distributions under all seven two-sample measures;
* label overlap: composite (category, per-image count bucket, metadata)
  histograms compared on a canonically ordered support;
* pixel intensity match: per-channel 256-bin intensity histograms pooled
  over every pixel of every image.
"""

from __future__ import annotations

import os
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import statdist
from .dataio import AnnotationSet
from .errors import ValidationError

WORKING_SIZE = 512
POOL_FACTOR = 8
COUNT_BUCKET_CAP = 10  # exact object counts up to 10, then one "10+" bucket

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class HeatMap:
    """Pooled per-image-normalized object coverage grid."""

    cells: np.ndarray

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.ndim != 2:
            raise ValidationError("heatmap cells must be 2-D")
        if not np.isfinite(cells).all() or (cells < 0).any():
            raise ValidationError("heatmap cells must be finite and nonnegative")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])


@dataclass(frozen=True)
class BBoxFeatureSet:
    """Per-object box features, normalized for cross-resolution comparison."""

    aspect_ratios: np.ndarray  # w / h
    diagonals: np.ndarray      # box diagonal / image diagonal
    areas: np.ndarray          # box area / image area


@dataclass(frozen=True)
class LabelDistribution:
    """Histogram over composite (category, count bucket, metadata) keys."""

    keys: tuple
    counts: np.ndarray

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self.counts.sum()


@dataclass(frozen=True)
class PixelHistograms:
    """Per-channel intensity counts pooled over a whole image corpus.

    ``counts`` is int64 of shape (3, 256) in R, G, B order; the mass
    vectors are derived. ``skipped`` counts undecodable files.
    """

    counts: np.ndarray
    skipped: int = 0

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (3, 256) or (counts < 0).any():
            raise ValidationError("pixel histograms must be nonnegative (3, 256) counts")
        if counts.sum(axis=1).min() == 0:
            raise ValidationError("each channel needs at least one counted pixel")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def r(self) -> np.ndarray:
        return self.counts[0] / self.counts[0].sum()

    @property
    def g(self) -> np.ndarray:
        return self.counts[1] / self.counts[1].sum()

    @property
    def b(self) -> np.ndarray:
        return self.counts[2] / self.counts[2].sum()


# ---------------------------------------------------------------------------
# Spatial distribution


def build_heatmap(
    ann: AnnotationSet, working_w: int = WORKING_SIZE, working_h: int = WORKING_SIZE
) -> HeatMap:
    """Accumulate object coverage on a common canvas, pool 8x8, normalize.

    Boxes are rescaled from native image size to the working canvas; a
    canvas position counts every object whose box overlaps it. Pooling
    windows at the right/bottom edge average over the pixels they
    actually cover, and the final grid is divided by the image count so
    differently sized sets stay comparable.
    """
    if not ann.images:
        raise ValidationError("cannot build a heatmap from zero images")
    if working_w < 1 or working_h < 1:
        raise ValidationError("working resolution must be positive")
    accum = np.zeros((working_h, working_w), dtype=np.float64)
    index = ann.image_index
    for obj in ann.objects:
        img = index[obj.image_id]
        sx = working_w / img.width
        sy = working_h / img.height
        x0 = max(int(np.floor(obj.x * sx)), 0)
        x1 = min(int(np.ceil((obj.x + obj.w) * sx)), working_w)
        y0 = max(int(np.floor(obj.y * sy)), 0)
        y1 = min(int(np.ceil((obj.y + obj.h) * sy)), working_h)
        accum[y0:y1, x0:x1] += 1.0

    row_starts = np.arange(0, working_h, POOL_FACTOR)
    col_starts = np.arange(0, working_w, POOL_FACTOR)
    sums = np.add.reduceat(np.add.reduceat(accum, row_starts, axis=0), col_starts, axis=1)
    row_sizes = np.minimum(row_starts + POOL_FACTOR, working_h) - row_starts
    col_sizes = np.minimum(col_starts + POOL_FACTOR, working_w) - col_starts
    pooled = sums / np.outer(row_sizes, col_sizes)
    return HeatMap(cells=pooled / len(ann.images))


def spatial_distribution_difference(real: HeatMap, synth: HeatMap) -> float:
    """RMSE between two pooled heatmaps of equal shape."""
    if real.cells.shape != synth.cells.shape:
        raise ValidationError(
            f"heatmap shapes differ: {real.cells.shape} vs {synth.cells.shape}"
        )
    return float(np.sqrt(np.mean((real.cells - synth.cells) ** 2)))


# ---------------------------------------------------------------------------
# Bounding-box match


def bbox_features(ann: AnnotationSet) -> BBoxFeatureSet:
    if not ann.objects:
        raise ValidationError("annotation set has no objects")
    index = ann.image_index
    aspect = np.empty(len(ann.objects))
    diag = np.empty(len(ann.objects))
    area = np.empty(len(ann.objects))
    for i, obj in enumerate(ann.objects):
        img = index[obj.image_id]
        aspect[i] = obj.w / obj.h
        diag[i] = np.hypot(obj.w, obj.h) / np.hypot(img.width, img.height)
        area[i] = (obj.w * obj.h) / (img.width * img.height)
    return BBoxFeatureSet(aspect_ratios=aspect, diagonals=diag, areas=area)


def bbox_match(real: AnnotationSet, synth: AnnotationSet) -> dict[str, dict[str, float]]:
    """All seven measures for each box feature.

    The fused sub-metric downstream reads the energy-distance row of
    each feature.
    """
    fr = bbox_features(real)
    fs = bbox_features(synth)
    return {
        "aspect_ratio": statdist.score_table(fr.aspect_ratios, fs.aspect_ratios),
        "diagonal": statdist.score_table(fr.diagonals, fs.diagonals),
        "area": statdist.score_table(fr.areas, fs.areas),
    }


# ---------------------------------------------------------------------------
# Label overlap


def _count_bucket(count: int) -> int:
    return count if count <= COUNT_BUCKET_CAP else COUNT_BUCKET_CAP + 1


def label_distribution(ann: AnnotationSet, metadata_keys=()) -> LabelDistribution:
    """Composite-key histogram: one key per (image, category) occurrence.

    Keys are (category_id, bucketed per-image count of that category,
    metadata values); images without objects contribute a single key
    with category -1 so empty scenes still carry mass.
    """
    keys: Counter = Counter()
    by_image = ann.objects_by_image()
    index = ann.image_index
    for image_id, objs in by_image.items():
        meta = index[image_id].metadata_dict()
        meta_values = tuple(str(meta.get(k, "")) for k in metadata_keys)
        if not objs:
            keys[(-1, 0) + meta_values] += 1
            continue
        per_category = Counter(o.category_id for o in objs)
        for category_id, count in per_category.items():
            keys[(category_id, _count_bucket(count)) + meta_values] += 1
    ordered = tuple(sorted(keys))
    return LabelDistribution(
        keys=ordered, counts=np.array([keys[k] for k in ordered], dtype=np.int64)
    )


def label_overlap(
    real: AnnotationSet, synth: AnnotationSet, metadata_keys=()
) -> dict[str, float]:
    """All seven measures over aligned composite-key label distributions.

    Distributions are aligned on the sorted union of keys; sample-kind
    measures use the key rank as the sample value. Disjoint category
    sets are not an error: they yield maximal distances plus a warning.
    """
    dr = label_distribution(real, metadata_keys)
    ds = label_distribution(synth, metadata_keys)
    support = sorted(set(dr.keys) | set(ds.keys))
    cr = np.zeros(len(support))
    cs = np.zeros(len(support))
    r_index = {k: c for k, c in zip(dr.keys, dr.counts)}
    s_index = {k: c for k, c in zip(ds.keys, ds.counts)}
    for i, key in enumerate(support):
        cr[i] = r_index.get(key, 0)
        cs[i] = s_index.get(key, 0)

    shared_categories = {k[0] for k in dr.keys} & {k[0] for k in ds.keys}
    if not shared_categories:
        warnings.warn("no shared categories between label distributions", stacklevel=2)

    ranks = np.arange(len(support), dtype=np.float64)
    edges = np.arange(len(support) + 1, dtype=np.float64)
    hp = statdist.EmpiricalDistribution.from_histogram(edges, cr / cr.sum())
    hq = statdist.EmpiricalDistribution.from_histogram(edges, cs / cs.sum())
    return {
        "ks": statdist.ks_counts(cr, cs),
        "ad": statdist.ad_statistic_counts(ranks, cr, cs),
        "kl": statdist.kl_divergence(hp, hq),
        "js": statdist.js_divergence(hp, hq),
        "energy": statdist.energy_distance_counts(ranks, cr, cs),
        "wasserstein": statdist.wasserstein_counts(ranks, cr, cs),
        "bhattacharyya": statdist.bhattacharyya_distance(hp, hq),
    }


# ---------------------------------------------------------------------------
# Pixel intensity match


def _channel_counts(path: Path) -> np.ndarray | None:
    try:
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError):
        return None
    flat = rgb.reshape(-1, 3)
    return np.stack(
        [np.bincount(flat[:, c], minlength=256) for c in range(3)]
    ).astype(np.int64)


def pixel_histograms(image_dir: str | Path, max_threads: int | None = None) -> PixelHistograms:
    """Pooled per-channel intensity histograms over a directory of images.

    Undecodable files are skipped (counted in ``skipped``); a directory
    with no decodable image is an error. Accumulation order cannot
    affect the result (integer sums), so decoding may run in parallel,
    capped by ``max_threads`` or the SDQM_THREADS environment variable.
    """
    image_dir = Path(image_dir)
    files = sorted(
        p for p in image_dir.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if not files:
        raise ValidationError(f"no PNG/JPEG files in {image_dir}")
    if max_threads is None:
        max_threads = int(os.environ.get("SDQM_THREADS", "0")) or None

    totals = np.zeros((3, 256), dtype=np.int64)
    skipped = 0
    if max_threads is not None and max_threads > 1:
        with ThreadPoolExecutor(max_workers=max_threads) as pool:
            results = list(pool.map(_channel_counts, files))
    else:
        results = [_channel_counts(p) for p in files]
    for res in results:
        if res is None:
            skipped += 1
        else:
            totals += res
    if totals.sum() == 0:
        raise ValidationError(f"no decodable images in {image_dir}")
    if skipped:
        warnings.warn(f"skipped {skipped} undecodable files in {image_dir}", stacklevel=2)
    return PixelHistograms(counts=totals, skipped=skipped)


_INTENSITY_VALUES = np.arange(256, dtype=np.float64)
_INTENSITY_EDGES = np.arange(257, dtype=np.float64)


def pixel_intensity_match(
    real: PixelHistograms, synth: PixelHistograms
) -> dict[str, dict[str, float]]:
    """All seven measures per color channel.

    Sample-kind measures run on the binned counts directly (identical to
    expanding every pixel, without materializing millions of samples).
    """
    out: dict[str, dict[str, float]] = {}
    for ci, channel in enumerate(("r", "g", "b")):
        cr = real.counts[ci].astype(np.float64)
        cs = synth.counts[ci].astype(np.float64)
        hp = statdist.EmpiricalDistribution.from_histogram(_INTENSITY_EDGES, cr / cr.sum())
        hq = statdist.EmpiricalDistribution.from_histogram(_INTENSITY_EDGES, cs / cs.sum())
        out[channel] = {
            "ks": statdist.ks_counts(cr, cs),
            "ad": statdist.ad_statistic_counts(_INTENSITY_VALUES, cr, cs),
            "kl": statdist.kl_divergence(hp, hq),
            "js": statdist.js_divergence(hp, hq),
            "energy": statdist.energy_distance_counts(_INTENSITY_VALUES, cr, cs),
            "wasserstein": statdist.wasserstein_counts(_INTENSITY_VALUES, cr, cs),
            "bhattacharyya": statdist.bhattacharyya_distance(hp, hq),
        }
    return out
