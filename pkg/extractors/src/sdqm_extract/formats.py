"""Writers and a minimal reader for the interchange file formats.

These mirror the byte layouts the metrics package reads: the binary
embedding matrix with a JSON ids sidecar, the detection-log JSONL, and
the COCO-subset annotation schema. Conformance is enforced by tests that
round-trip every artifact through the consumer's loaders.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EMBEDDING_MAGIC = b"SDQM"
EMBEDDING_VERSION = 1
_HEADER = struct.Struct("<4sIQI")


def write_embeddings(ids: list[str], rows: np.ndarray, path: str | Path) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] != len(ids):
        raise ValueError("rows must be 2-D with one row per id")
    if not np.isfinite(rows).all():
        raise ValueError("refusing to write non-finite embeddings")
    path = Path(path)
    header = _HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, rows.shape[0], rows.shape[1])
    path.write_bytes(header + rows.tobytes())
    sidecar = path.with_name(path.name + ".ids.json")
    sidecar.write_text(json.dumps(list(ids), separators=(",", ":")) + "\n",
                       encoding="utf-8")


def write_detection_log(records, class_count: int, mode: str, path: str | Path) -> None:
    """records: iterable of (image_id, gt_category, p_gt)."""
    if mode not in ("conditional", "predictive"):
        raise ValueError(f"unknown mode {mode!r}")
    lines = [json.dumps({"class_count": int(class_count), "mode": mode},
                        separators=(",", ":"))]
    count = 0
    for image_id, gt_category, p_gt in records:
        p = float(min(max(p_gt, 0.0), 1.0))
        lines.append(json.dumps(
            {"image_id": str(image_id), "gt_category": int(gt_category), "p_gt": p},
            separators=(",", ":"),
        ))
        count += 1
    if count == 0:
        raise ValueError("refusing to write an empty detection log")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class GroundTruthBox:
    image_id: str
    category_id: int
    x: float
    y: float
    w: float
    h: float


@dataclass
class DetectionDataset:
    """One split of a detector-native dataset directory."""

    image_paths: dict[str, Path]          # image id -> file
    sizes: dict[str, tuple[int, int]]     # image id -> (width, height)
    boxes: list[GroundTruthBox]
    categories: dict[int, str]


def load_split(split_dir: str | Path) -> DetectionDataset:
    """Read ``<split>/annotations.json`` plus its ``images/`` directory."""
    split_dir = Path(split_dir)
    doc = json.loads((split_dir / "annotations.json").read_text(encoding="utf-8"))
    image_dir = split_dir / "images"
    paths: dict[str, Path] = {}
    sizes: dict[str, tuple[int, int]] = {}
    for entry in doc["images"]:
        iid = str(entry["id"])
        for suffix in (".png", ".jpg", ".jpeg"):
            candidate = image_dir / f"{iid}{suffix}"
            if candidate.exists():
                paths[iid] = candidate
                break
        else:
            raise FileNotFoundError(f"no image file for id {iid!r} in {image_dir}")
        sizes[iid] = (int(entry["width"]), int(entry["height"]))
    boxes = [
        GroundTruthBox(
            image_id=str(a["image_id"]),
            category_id=int(a["category_id"]),
            x=float(a["bbox"][0]), y=float(a["bbox"][1]),
            w=float(a["bbox"][2]), h=float(a["bbox"][3]),
        )
        for a in doc["annotations"]
    ]
    categories = {int(c["id"]): str(c["name"]) for c in doc["categories"]}
    return DetectionDataset(image_paths=paths, sizes=sizes, boxes=boxes,
                            categories=categories)
