"""Detection-log export: match detector output to ground truth.

Predictions are class-mapped into the dataset's category space
(unmapped predictions are ignored), paired to ground-truth objects by
highest IoU at the 0.5 threshold, and each ground-truth object is logged
with the probability the detector put on its (mapped) class; unmatched
objects are logged with probability zero.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .detector import (
    Detection,
    GridDetector,
    detect,
    load_checkpoint,
    train_detector,
)
from .formats import DetectionDataset, GroundTruthBox, load_split, write_detection_log

logger = logging.getLogger(__name__)

IOU_THRESHOLD = 0.5


def iou(a: GroundTruthBox, d: Detection) -> float:
    ax1, ay1, ax2, ay2 = a.x, a.y, a.x + a.w, a.y + a.h
    bx1, by1, bx2, by2 = d.x, d.y, d.x + d.w, d.y + d.h
    ix = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    iy = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = ix * iy
    union = a.w * a.h + max(d.w, 0.0) * max(d.h, 0.0) - inter
    return inter / union if union > 0 else 0.0


def match_records(
    dataset: DetectionDataset,
    model: GridDetector,
    class_map: dict[int, int],
) -> list[tuple[str, int, float]]:
    """One record per ground-truth object, in annotation file order."""
    detections_by_image: dict[str, list[Detection]] = {}
    for image_id, path in sorted(dataset.image_paths.items()):
        raw = detect(model, path, dataset.sizes[image_id])
        mapped = []
        for det in raw:
            target = class_map.get(det.class_id)
            if target is None:
                continue  # unmapped prediction: ignored
            mapped.append((det, target))
        detections_by_image[image_id] = mapped

    used: dict[str, set[int]] = {i: set() for i in dataset.image_paths}
    records = []
    for gt in dataset.boxes:
        candidates = detections_by_image.get(gt.image_id, [])
        best_idx = -1
        best_iou = IOU_THRESHOLD
        for idx, (det, target) in enumerate(candidates):
            if idx in used[gt.image_id] or target != gt.category_id:
                continue
            overlap = iou(gt, det)
            if overlap >= best_iou:
                best_iou = overlap
                best_idx = idx
        if best_idx >= 0:
            used[gt.image_id].add(best_idx)
            p_gt = candidates[best_idx][0].class_prob
        else:
            p_gt = 0.0
        records.append((gt.image_id, gt.category_id, p_gt))
    return records


def export_detection_log(
    weights: str | Path,
    data_dir: str | Path,
    mode: str,
    out: str | Path,
    class_map: dict[int, int] | None = None,
    epochs: int = 10,
    seed: int = 0,
) -> int:
    """Run the predictive or conditional protocol and write the log.

    ``data_dir`` holds ``train/`` (fine-tuning split, conditional mode
    only) and ``val/`` (validation split that produces the records).
    ``weights`` is a detector checkpoint; the string ``fresh:C`` builds
    an untrained C-class detector instead, for desk-scale experiments.
    Returns the number of records written.
    """
    if mode not in ("conditional", "predictive"):
        raise ValueError(f"unknown mode {mode!r}")
    data_dir = Path(data_dir)
    val = load_split(data_dir / "val")

    if isinstance(weights, str) and weights.startswith("fresh:"):
        model = GridDetector(class_count=int(weights.split(":", 1)[1]))
    else:
        model = load_checkpoint(weights)

    if mode == "conditional":
        train = load_split(data_dir / "train")
        logger.info("fine-tuning with frozen backbone for %d epochs", epochs)
        model = train_detector(model, train, epochs=epochs, seed=seed,
                               freeze_backbone=True)

    if class_map is None:
        class_map = {c: c for c in range(model.class_count)}
    records = match_records(val, model, class_map)
    class_count = max(2, len(val.categories))
    write_detection_log(records, class_count=class_count, mode=mode, path=out)
    return len(records)
