"""On-disk artifact formats and dataset-pair plumbing.

Three artifact kinds are defined here:

* Annotation files: a COCO-style JSON subset with ``images``,
  ``annotations`` and ``categories`` keys.
* Embedding files: a little-endian binary matrix (magic ``SDQM``,
  u32 version, u64 row count, u32 dim, then float32 payload) with a
  JSON sidecar holding the row identifiers.
* Detection logs: JSONL with a header line carrying ``class_count``
  and ``mode``, then one record per matched ground-truth object.

All loaders are pure and the returned values are treated as immutable.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

EMBEDDING_MAGIC = b"SDQM"
EMBEDDING_VERSION = 1

_HEADER = struct.Struct("<4sIQI")  # magic, version, N, dim


@dataclass(frozen=True)
class ImageInfo:
    """One image entry: identifier, pixel dimensions, optional metadata."""

    id: str
    width: int
    height: int
    metadata: tuple[tuple[str, str], ...] = ()

    def metadata_dict(self) -> dict[str, str]:
        return dict(self.metadata)


@dataclass(frozen=True)
class ObjectBox:
    """One annotated object: owning image, category, pixel-space box."""

    image_id: str
    category_id: int
    x: float
    y: float
    w: float
    h: float

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass
class AnnotationSet:
    """Parsed annotations for one dataset.

    ``objects`` preserves file order. ``clamp_warnings`` counts boxes
    that were pulled back inside their image bounds at load time.
    """

    images: tuple[ImageInfo, ...]
    objects: tuple[ObjectBox, ...]
    categories: dict[int, str]
    clamp_warnings: int = 0

    def __post_init__(self) -> None:
        ids = [im.id for im in self.images]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate image ids in annotation set")
        known = set(ids)
        dangling = sorted({o.image_id for o in self.objects} - known)
        if dangling:
            raise ValidationError(
                f"annotations reference unknown image ids: {dangling}"
            )
        for o in self.objects:
            if o.w <= 0 or o.h <= 0:
                raise ValidationError(
                    f"non-positive box size {o.w}x{o.h} on image {o.image_id!r}"
                )

    @property
    def image_index(self) -> dict[str, ImageInfo]:
        return {im.id: im for im in self.images}

    def objects_by_image(self) -> dict[str, list[ObjectBox]]:
        by_image: dict[str, list[ObjectBox]] = {im.id: [] for im in self.images}
        for o in self.objects:
            by_image[o.image_id].append(o)
        return by_image


@dataclass(frozen=True)
class EmbeddingSet:
    """Per-image feature vectors: ``rows[i]`` belongs to ``ids[i]``."""

    ids: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float32)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValidationError("embedding matrix must be 2-D with N >= 1")
        if len(self.ids) != rows.shape[0]:
            raise ValidationError(
                f"{len(self.ids)} ids for {rows.shape[0]} embedding rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("embedding ids must be unique")
        bad = ~np.isfinite(rows)
        if bad.any():
            row = int(np.nonzero(bad.any(axis=1))[0][0])
            raise ValidationError(f"non-finite embedding entry at row {row}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def select(self, indices) -> np.ndarray:
        """Rows for a sequence of integer indices (copy)."""
        return self.rows[np.asarray(indices, dtype=np.intp)]


@dataclass(frozen=True)
class DetectionRecord:
    image_id: str
    gt_category: int
    p_gt: float


@dataclass(frozen=True)
class DetectionLog:
    """Probabilities a detector assigned to each ground-truth class."""

    records: tuple[DetectionRecord, ...]
    class_count: int
    source_mode: str  # "conditional" | "predictive"

    def __post_init__(self) -> None:
        if not self.records:
            raise ValidationError("detection log has no records")
        if self.class_count < 2:
            raise ValidationError("class_count must be >= 2")
        if self.source_mode not in ("conditional", "predictive"):
            raise ValidationError(f"unknown source_mode {self.source_mode!r}")
        for i, r in enumerate(self.records):
            if not (0.0 <= r.p_gt <= 1.0) or math.isnan(r.p_gt):
                raise ValidationError(
                    f"record {i}: probability {r.p_gt} outside [0, 1]"
                )

    def probabilities(self) -> np.ndarray:
        return np.array([r.p_gt for r in self.records], dtype=np.float64)


@dataclass(frozen=True)
class CategoryMap:
    """Bijective mapping between synthetic and real category ids.

    Categories absent from the mapping are dropped by ``remap_categories``,
    never remapped onto something else.
    """

    forward: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        src = [a for a, _ in self.forward]
        dst = [b for _, b in self.forward]
        if len(set(src)) != len(src) or len(set(dst)) != len(dst):
            raise ValidationError("category map must be a bijection on the mapped subset")

    def as_dict(self) -> dict[int, int]:
        return dict(self.forward)


@dataclass
class DatasetPair:
    """A real/synthetic pair of (annotations, embeddings, image dir)."""

    real_annotations: AnnotationSet
    real_embeddings: EmbeddingSet | None
    real_image_dir: Path | None
    synth_annotations: AnnotationSet
    synth_embeddings: EmbeddingSet | None
    synth_image_dir: Path | None
    category_map: CategoryMap | None = None
    predictive_log: DetectionLog | None = None
    conditional_log: DetectionLog | None = None

    def __post_init__(self) -> None:
        if self.real_embeddings is not None and self.synth_embeddings is not None:
            if self.real_embeddings.dim != self.synth_embeddings.dim:
                raise ValidationError(
                    "real and synthetic embeddings disagree on dimensionality: "
                    f"{self.real_embeddings.dim} vs {self.synth_embeddings.dim}"
                )


def _clamp_box(x: float, y: float, w: float, h: float, img_w: int, img_h: int):
    """Clamp a box into image bounds. Returns (x, y, w, h, changed)."""
    x0, y0 = max(x, 0.0), max(y, 0.0)
    x1, y1 = min(x + w, float(img_w)), min(y + h, float(img_h))
    changed = (x0, y0, x1 - x0, y1 - y0) != (x, y, w, h)
    return x0, y0, x1 - x0, y1 - y0, changed


def load_annotations(path: str | Path) -> AnnotationSet:
    """Parse a COCO-subset annotation file.

    Boxes slightly out of bounds are clamped (counted in
    ``clamp_warnings``); boxes entirely outside their image are a
    validation error, as are references to unknown images.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read annotation file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc

    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise FormatError(f"{path}: missing required key {key!r}")

    images = []
    for entry in doc["images"]:
        meta = entry.get("metadata") or {}
        images.append(
            ImageInfo(
                id=str(entry["id"]),
                width=int(entry["width"]),
                height=int(entry["height"]),
                metadata=tuple(sorted((str(k), str(v)) for k, v in meta.items())),
            )
        )
    index = {im.id: im for im in images}

    objects = []
    warnings = 0
    for i, entry in enumerate(doc["annotations"]):
        image_id = str(entry["image_id"])
        img = index.get(image_id)
        if img is None:
            raise ValidationError(
                f"{path}: annotation {i} references unknown image id {image_id!r}"
            )
        bbox = entry["bbox"]
        if len(bbox) != 4:
            raise FormatError(f"{path}: annotation {i} bbox must have 4 entries")
        x, y, w, h = (float(v) for v in bbox)
        if w <= 0 or h <= 0:
            raise ValidationError(
                f"{path}: annotation {i} has non-positive box size {w}x{h}"
            )
        x, y, w, h, changed = _clamp_box(x, y, w, h, img.width, img.height)
        if w <= 0 or h <= 0:
            raise ValidationError(
                f"{path}: annotation {i} lies entirely outside image {image_id!r}"
            )
        if changed:
            warnings += 1
        objects.append(
            ObjectBox(
                image_id=image_id,
                category_id=int(entry["category_id"]),
                x=x, y=y, w=w, h=h,
            )
        )

    categories = {int(c["id"]): str(c["name"]) for c in doc["categories"]}
    return AnnotationSet(
        images=tuple(images),
        objects=tuple(objects),
        categories=categories,
        clamp_warnings=warnings,
    )


def save_annotations(ann: AnnotationSet, path: str | Path) -> None:
    """Write an AnnotationSet back out in the COCO-subset schema."""
    doc = {
        "images": [
            {
                "id": im.id,
                "width": im.width,
                "height": im.height,
                **({"metadata": im.metadata_dict()} if im.metadata else {}),
            }
            for im in ann.images
        ],
        "annotations": [
            {"image_id": o.image_id, "category_id": o.category_id,
             "bbox": [o.x, o.y, o.w, o.h]}
            for o in ann.objects
        ],
        "categories": [
            {"id": cid, "name": name} for cid, name in sorted(ann.categories.items())
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".ids.json")


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Read a binary embedding file and its ids sidecar."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read embedding file {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than header")
    magic, version, n, dim = _HEADER.unpack_from(blob)
    if magic != EMBEDDING_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {EMBEDDING_MAGIC!r}")
    if version != EMBEDDING_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + n * dim * 4
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload truncated or oversized "
            f"({len(blob)} bytes, expected {expected} for {n}x{dim})"
        )
    rows = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n, dim)

    sidecar = _sidecar_path(path)
    try:
        ids = json.loads(sidecar.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"missing ids sidecar {sidecar}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed ids sidecar {sidecar}: {exc.msg}") from exc
    if not isinstance(ids, list) or len(ids) != n:
        raise FormatError(
            f"{sidecar}: expected JSON array of {n} strings, got {len(ids) if isinstance(ids, list) else type(ids).__name__}"
        )

    bad = ~np.isfinite(rows)
    if bad.any():
        row = int(np.nonzero(bad.any(axis=1))[0][0])
        raise ValidationError(f"{path}: non-finite value at row {row}")
    return EmbeddingSet(ids=tuple(str(i) for i in ids), rows=rows.copy())


def save_embeddings(es: EmbeddingSet, path: str | Path) -> None:
    """Write the canonical binary layout; round-trips byte-identically."""
    path = Path(path)
    header = _HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, len(es), es.dim)
    payload = np.ascontiguousarray(es.rows, dtype="<f4").tobytes()
    path.write_bytes(header + payload)
    _sidecar_path(path).write_text(
        json.dumps(list(es.ids), separators=(",", ":")) + "\n", encoding="utf-8"
    )


def load_detection_log(path: str | Path) -> DetectionLog:
    """Read a detection-log JSONL file (header line, then records)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read detection log {path}: {exc}") from exc
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: no records")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} line 1: {exc.msg}") from exc
    if "class_count" not in header or "mode" not in header:
        raise FormatError(f"{path}: first line must carry class_count and mode")

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path} line {lineno}: {exc.msg}") from exc
        try:
            p = float(rec["p_gt"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path} line {lineno}: bad p_gt field") from exc
        if not (0.0 <= p <= 1.0):
            raise ValidationError(
                f"{path} line {lineno}: probability {p} outside [0, 1]"
            )
        records.append(
            DetectionRecord(
                image_id=str(rec["image_id"]),
                gt_category=int(rec["gt_category"]),
                p_gt=p,
            )
        )
    if not records:
        raise ValidationError(f"{path}: no records")
    return DetectionLog(
        records=tuple(records),
        class_count=int(header["class_count"]),
        source_mode=str(header["mode"]),
    )


def save_detection_log(log: DetectionLog, path: str | Path) -> None:
    lines = [json.dumps({"class_count": log.class_count, "mode": log.source_mode},
                        separators=(",", ":"))]
    lines += [
        json.dumps(
            {"image_id": r.image_id, "gt_category": r.gt_category, "p_gt": r.p_gt},
            separators=(",", ":"),
        )
        for r in log.records
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def remap_categories(ann: AnnotationSet, cmap: CategoryMap) -> tuple[AnnotationSet, int]:
    """Apply a category map to an annotation set.

    Unmapped categories are dropped. Returns the remapped set and the
    number of dropped objects.
    """
    mapping = cmap.as_dict()
    kept = []
    dropped = 0
    for o in ann.objects:
        target = mapping.get(o.category_id)
        if target is None:
            dropped += 1
            continue
        kept.append(ObjectBox(o.image_id, target, o.x, o.y, o.w, o.h))
    categories = {
        mapping[cid]: name for cid, name in ann.categories.items() if cid in mapping
    }
    remapped = AnnotationSet(
        images=ann.images,
        objects=tuple(kept),
        categories=categories,
        clamp_warnings=ann.clamp_warnings,
    )
    return remapped, dropped


def save_matrix(matrix: np.ndarray, path: str | Path, ids: list[str] | None = None) -> None:
    """Write any 2-D float matrix in the embedding binary format.

    Used for heatmap and histogram artifacts; ``dim`` is the row width.
    """
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ValidationError("matrix artifacts must be 2-D")
    if ids is None:
        ids = [f"row{i}" for i in range(matrix.shape[0])]
    save_embeddings(EmbeddingSet(ids=tuple(ids), rows=matrix), path)
