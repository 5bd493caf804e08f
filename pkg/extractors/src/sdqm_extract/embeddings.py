"""Embedding export: images in, binary embedding file + ids sidecar out."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .backends import resolve_backend
from .formats import write_embeddings

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass
class ExtractorSpec:
    model: str
    images: list[Path]
    out: Path
    prompt: str | None = None
    backend: str = "auto"
    weights: str | None = None
    skipped: list[str] = field(default_factory=list)


def list_images(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise FileNotFoundError(f"no PNG/JPEG images in {directory}")
    return files


def export_embeddings(spec: ExtractorSpec) -> tuple[int, int]:
    """Encode every decodable image, preserving input order.

    Returns (rows written, files skipped). Row ids are the image file
    stems; undecodable files are skipped and logged.
    """
    backend = resolve_backend(spec.model, backend=spec.backend,
                              weights=spec.weights, prompt=spec.prompt)
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for path in spec.images:
        try:
            with Image.open(path) as img:
                vec = backend.encode(img)
        except (UnidentifiedImageError, OSError) as exc:
            logger.warning("skipping undecodable image %s: %s", path, exc)
            spec.skipped.append(str(path))
            continue
        ids.append(path.stem)
        rows.append(vec)
    if not rows:
        raise FileNotFoundError("no image could be decoded; nothing to write")
    write_embeddings(ids, np.stack(rows), spec.out)
    return len(rows), len(spec.skipped)
