import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sdqm.dataio import AnnotationSet, EmbeddingSet, ImageInfo, ObjectBox


def make_annotations(images, objects, categories=None) -> AnnotationSet:
    """images: (id, w, h) or (id, w, h, metadata dict); objects:
    (image_id, category_id, x, y, w, h)."""
    infos = []
    for entry in images:
        if len(entry) == 4:
            iid, w, h, meta = entry
            meta_t = tuple(sorted((str(k), str(v)) for k, v in meta.items()))
        else:
            iid, w, h = entry
            meta_t = ()
        infos.append(ImageInfo(id=str(iid), width=w, height=h, metadata=meta_t))
    boxes = tuple(
        ObjectBox(image_id=str(i), category_id=c, x=x, y=y, w=w, h=h)
        for i, c, x, y, w, h in objects
    )
    if categories is None:
        categories = {c: f"cat{c}" for c in sorted({o.category_id for o in boxes})}
    return AnnotationSet(images=tuple(infos), objects=boxes, categories=categories)


def make_embeddings(rows, prefix="img") -> EmbeddingSet:
    rows = np.asarray(rows, dtype=np.float32)
    return EmbeddingSet(
        ids=tuple(f"{prefix}{i}" for i in range(rows.shape[0])), rows=rows
    )


def write_annotation_file(path: Path, images, annotations, categories) -> Path:
    doc = {"images": images, "annotations": annotations, "categories": categories}
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
