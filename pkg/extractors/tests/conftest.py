import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def write_detection_dataset(root: Path, n: int = 10, seed: int = 0,
                            splits=("train", "val"), identical_splits=True):
    """Tiny one-class detection dataset: bright box on dark noise."""
    rng = np.random.default_rng(seed)

    def build(split_dir: Path, gen):
        (split_dir / "images").mkdir(parents=True, exist_ok=True)
        images, annotations = [], []
        for i in range(n):
            iid = f"im{i}"
            arr = gen.integers(0, 80, size=(64, 64, 3)).astype(np.uint8)
            x, y = int(gen.integers(4, 30)), int(gen.integers(4, 30))
            w, h = int(gen.integers(16, 28)), int(gen.integers(16, 28))
            arr[y:y + h, x:x + w] = [220, (40 + 10 * i) % 256, 30]
            Image.fromarray(arr, "RGB").save(split_dir / "images" / f"{iid}.png")
            images.append({"id": iid, "width": 64, "height": 64})
            annotations.append(
                {"image_id": iid, "category_id": 0, "bbox": [x, y, w, h]}
            )
        (split_dir / "annotations.json").write_text(json.dumps({
            "images": images,
            "annotations": annotations,
            "categories": [{"id": 0, "name": "thing"}],
        }))

    state = rng.bit_generator.state
    for split in splits:
        gen = np.random.default_rng(seed) if identical_splits else rng
        if identical_splits:
            gen.bit_generator.state = state
        build(root / split, gen)
    return root


def write_image_dir(root: Path, n: int = 6, seed: int = 0) -> Path:
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        arr = rng.integers(0, 256, size=(40, 32, 3)).astype(np.uint8)
        Image.fromarray(arr, "RGB").save(root / f"img{i:03d}.png")
    return root


@pytest.fixture
def rng():
    return np.random.default_rng(7)
