"""Feature-extraction backends.

Three extractor names are supported, each pinned to its output
dimensionality: ``dinov2-small`` (384), ``groundingdino-tiny`` (256,
encoder only, takes a text prompt), and ``clip-vit-b32`` (512).

Two backend families implement them:

* ``hub``: the actual pretrained transformers checkpoints, loaded from a
  local path or the hub when available.
* ``stub``: a deterministic image-statistics projection honoring the
  same output dims. It exists for offline pipelines and tests; its
  features are structurally valid but carry no pretrained semantics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

MODEL_DIMS = {
    "dinov2-small": 384,
    "groundingdino-tiny": 256,
    "clip-vit-b32": 512,
}

DEFAULT_CHECKPOINTS = {
    "dinov2-small": "facebook/dinov2-small",
    "groundingdino-tiny": "IDEA-Research/grounding-dino-tiny",
    "clip-vit-b32": "openai/clip-vit-base-patch32",
}

_STUB_PATCH = 16  # stub backend downsamples to 16x16 RGB before projecting


class BackendError(RuntimeError):
    pass


def _check_model(model: str) -> int:
    if model not in MODEL_DIMS:
        raise BackendError(
            f"unknown extractor {model!r}; expected one of {sorted(MODEL_DIMS)}"
        )
    return MODEL_DIMS[model]


@dataclass
class StubBackend:
    """Deterministic stand-in: seeded random projection of pixel stats.

    The projection matrix is derived from the model name alone, so a
    given (model, image) pair always yields the same vector on any
    platform.
    """

    model: str

    def __post_init__(self) -> None:
        self.dim = _check_model(self.model)
        seed = int.from_bytes(
            hashlib.sha256(self.model.encode("utf-8")).digest()[:8], "little"
        )
        rng = np.random.default_rng(seed)
        self._projection = rng.standard_normal(
            (self.dim, _STUB_PATCH * _STUB_PATCH * 3)
        ).astype(np.float64) / np.sqrt(_STUB_PATCH * _STUB_PATCH * 3)

    def encode(self, image: Image.Image) -> np.ndarray:
        small = image.convert("RGB").resize((_STUB_PATCH, _STUB_PATCH), Image.BILINEAR)
        flat = np.asarray(small, dtype=np.float64).reshape(-1) / 255.0 - 0.5
        return np.tanh(self._projection @ flat).astype(np.float32)


class HubBackend:
    """Pretrained checkpoints via transformers; CPU inference, eval mode."""

    def __init__(self, model: str, weights: str | Path | None = None,
                 prompt: str | None = None):
        self.model = model
        self.dim = _check_model(model)
        self.prompt = prompt
        source = str(weights) if weights else DEFAULT_CHECKPOINTS[model]
        try:
            import torch  # noqa: F401
            import transformers
        except ImportError as exc:
            raise BackendError(
                "the hub backend needs torch and transformers installed"
            ) from exc
        try:
            if model == "clip-vit-b32":
                self._processor = transformers.AutoProcessor.from_pretrained(source)
                self._net = transformers.CLIPVisionModelWithProjection.from_pretrained(source)
            elif model == "groundingdino-tiny":
                if not prompt:
                    raise BackendError("groundingdino-tiny requires a text prompt")
                self._processor = transformers.AutoProcessor.from_pretrained(source)
                self._net = transformers.GroundingDinoModel.from_pretrained(source)
            else:
                self._processor = transformers.AutoImageProcessor.from_pretrained(source)
                self._net = transformers.AutoModel.from_pretrained(source)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(
                f"cannot load checkpoint {source!r} for {model}: {exc}"
            ) from exc
        self._net.eval()

    def encode(self, image: Image.Image) -> np.ndarray:
        import torch

        rgb = image.convert("RGB")
        with torch.no_grad():
            if self.model == "clip-vit-b32":
                inputs = self._processor(images=rgb, return_tensors="pt")
                feats = self._net(**inputs).image_embeds[0]
            elif self.model == "groundingdino-tiny":
                inputs = self._processor(images=rgb, text=self.prompt,
                                         return_tensors="pt")
                out = self._net(**inputs)
                # encoder-only use: pool the vision encoder sequence
                feats = out.encoder_last_hidden_state_vision[0].mean(dim=0)
            else:
                inputs = self._processor(images=rgb, return_tensors="pt")
                out = self._net(**inputs)
                feats = out.last_hidden_state[0, 0]  # CLS token
        vec = feats.cpu().numpy().astype(np.float32)
        if vec.shape != (self.dim,):
            raise BackendError(
                f"{self.model} produced shape {vec.shape}, expected ({self.dim},)"
            )
        return vec


def resolve_backend(model: str, backend: str = "auto",
                    weights: str | Path | None = None,
                    prompt: str | None = None):
    """Pick a backend: explicit ``stub``/``hub``, or ``auto`` (hub when
    loadable, otherwise an error naming the stub escape hatch)."""
    _check_model(model)
    if backend == "stub":
        return StubBackend(model)
    if backend == "hub":
        return HubBackend(model, weights=weights, prompt=prompt)
    if backend == "auto":
        try:
            return HubBackend(model, weights=weights, prompt=prompt)
        except BackendError as exc:
            raise BackendError(
                f"{exc}; pass --backend stub for a deterministic offline backend"
            ) from exc
    raise BackendError(f"unknown backend {backend!r}")
