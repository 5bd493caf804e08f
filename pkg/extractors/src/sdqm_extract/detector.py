"""A small single-stage grid detector used for detection-log export.

One prediction per 8x8 cell of the working image: objectness, box
offsets, and class logits. Small enough to train on CPU, expressive
enough to overfit tiny datasets, and structured so the backbone can be
frozen during fine-tuning while only the head adapts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch import nn

from .formats import DetectionDataset

STRIDE = 8
OBJECTNESS_THRESHOLD = 0.3
BOX_LOSS_WEIGHT = 5.0
OBJECTNESS_POS_WEIGHT = 8.0  # counter the 1-positive-per-grid imbalance


class GridDetector(nn.Module):
    def __init__(self, class_count: int, image_size: int = 64):
        super().__init__()
        if class_count < 2:
            raise ValueError("detector needs at least 2 classes")
        if image_size % STRIDE != 0:
            raise ValueError(f"image_size must be a multiple of {STRIDE}")
        self.class_count = class_count
        self.image_size = image_size
        self.backbone = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.ReLU(),
        )
        self.head = nn.Conv2d(64, 5 + class_count, 1)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(images))

    def freeze_backbone(self) -> None:
        for param in self.backbone.parameters():
            param.requires_grad_(False)


@dataclass(frozen=True)
class Detection:
    x: float
    y: float
    w: float
    h: float
    class_id: int
    class_prob: float
    objectness: float


def _load_image_tensor(path: Path, image_size: int) -> torch.Tensor:
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((image_size, image_size), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1)


def _batch(dataset: DetectionDataset, image_size: int):
    """Stack all images (sorted by id) with per-image box targets scaled
    to the working resolution."""
    ids = sorted(dataset.image_paths)
    images = torch.stack(
        [_load_image_tensor(dataset.image_paths[i], image_size) for i in ids]
    )
    boxes_by_image = {i: [] for i in ids}
    for box in dataset.boxes:
        w0, h0 = dataset.sizes[box.image_id]
        sx, sy = image_size / w0, image_size / h0
        boxes_by_image[box.image_id].append(
            (box.x * sx, box.y * sy, box.w * sx, box.h * sy, box.category_id)
        )
    return ids, images, boxes_by_image


def _targets(boxes, grid: int, class_count: int):
    obj = torch.zeros(grid, grid)
    cls = torch.full((grid, grid), -1, dtype=torch.long)
    box = torch.zeros(4, grid, grid)
    for (x, y, w, h, category) in boxes:
        cx, cy = x + w / 2.0, y + h / 2.0
        gx = min(int(cx // STRIDE), grid - 1)
        gy = min(int(cy // STRIDE), grid - 1)
        obj[gy, gx] = 1.0
        cls[gy, gx] = int(category) % class_count
        box[0, gy, gx] = cx / STRIDE - gx          # offset in [0, 1)
        box[1, gy, gx] = cy / STRIDE - gy
        box[2, gy, gx] = float(np.log(max(w, 1e-3) / STRIDE))
        box[3, gy, gx] = float(np.log(max(h, 1e-3) / STRIDE))
    return obj, cls, box


def train_detector(
    model: GridDetector,
    dataset: DetectionDataset,
    epochs: int,
    seed: int = 0,
    lr: float = 1e-3,
    freeze_backbone: bool = False,
) -> GridDetector:
    torch.manual_seed(seed)
    if freeze_backbone:
        model.freeze_backbone()
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=lr)
    bce = nn.BCEWithLogitsLoss(pos_weight=torch.tensor(OBJECTNESS_POS_WEIGHT))
    ce = nn.CrossEntropyLoss()

    ids, images, boxes_by_image = _batch(dataset, model.image_size)
    grid = model.image_size // STRIDE
    obj_t = torch.stack([_targets(boxes_by_image[i], grid, model.class_count)[0] for i in ids])
    cls_t = torch.stack([_targets(boxes_by_image[i], grid, model.class_count)[1] for i in ids])
    box_t = torch.stack([_targets(boxes_by_image[i], grid, model.class_count)[2] for i in ids])

    model.train()
    for _ in range(epochs):
        optimizer.zero_grad()
        out = model(images)
        obj_logit = out[:, 0]
        box_pred = torch.cat(
            [torch.sigmoid(out[:, 1:3]), out[:, 3:5]], dim=1
        )
        cls_logit = out[:, 5:]
        loss = bce(obj_logit, obj_t)
        assigned = obj_t > 0
        if assigned.any():
            mask = assigned.unsqueeze(1).expand_as(box_pred)
            loss = loss + BOX_LOSS_WEIGHT * torch.mean(
                (box_pred[mask] - box_t[mask]) ** 2
            )
            cls_flat = cls_logit.permute(0, 2, 3, 1)[assigned]
            loss = loss + ce(cls_flat, cls_t[assigned])
        loss.backward()
        optimizer.step()
    model.eval()
    return model


@torch.no_grad()
def detect(model: GridDetector, image_path: Path,
           native_size: tuple[int, int]) -> list[Detection]:
    """Decode all confident cells back to native pixel coordinates."""
    model.eval()
    tensor = _load_image_tensor(image_path, model.image_size).unsqueeze(0)
    out = model(tensor)[0]
    grid = model.image_size // STRIDE
    obj = torch.sigmoid(out[0])
    offsets = torch.sigmoid(out[1:3])
    sizes = torch.exp(out[3:5].clamp(max=4.0)) * STRIDE
    probs = torch.softmax(out[5:], dim=0)

    w0, h0 = native_size
    sx, sy = w0 / model.image_size, h0 / model.image_size
    detections = []
    for gy in range(grid):
        for gx in range(grid):
            score = float(obj[gy, gx])
            if score < OBJECTNESS_THRESHOLD:
                continue
            cx = (gx + float(offsets[0, gy, gx])) * STRIDE
            cy = (gy + float(offsets[1, gy, gx])) * STRIDE
            w = float(sizes[0, gy, gx])
            h = float(sizes[1, gy, gx])
            class_id = int(torch.argmax(probs[:, gy, gx]))
            detections.append(Detection(
                x=(cx - w / 2.0) * sx,
                y=(cy - h / 2.0) * sy,
                w=w * sx,
                h=h * sy,
                class_id=class_id,
                class_prob=float(probs[class_id, gy, gx]),
                objectness=score,
            ))
    detections.sort(key=lambda d: -d.objectness)
    return detections


def save_checkpoint(model: GridDetector, path: str | Path) -> None:
    torch.save(
        {
            "state_dict": model.state_dict(),
            "class_count": model.class_count,
            "image_size": model.image_size,
        },
        path,
    )


def load_checkpoint(path: str | Path) -> GridDetector:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise RuntimeError(f"cannot load detector checkpoint {path}: {exc}") from exc
    model = GridDetector(int(payload["class_count"]), int(payload["image_size"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
