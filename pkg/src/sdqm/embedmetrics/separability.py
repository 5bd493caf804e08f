"""Dataset separability: can a small classifier tell real from synthetic?

A bounded grid of feed-forward classifiers (linear up to two hidden
layers of width 128) is trained to distinguish the two embedding sets.
The result pairs the best held-out accuracy with that model's parameter
count, since accuracy alone is meaningless without capacity: a large
model separating the sets says less than a linear one doing the same.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import EmbeddingSet
from ..errors import ValidationError

# (hidden width, hidden depth); width 0 is a plain logistic regression
ARCHITECTURE_GRID = ((0, 1), (8, 1), (8, 2), (32, 1), (32, 2), (128, 1), (128, 2))

MIN_POINTS_PER_SIDE = 20
EPOCHS = 50
PATIENCE = 15
BATCH_SIZE = 32
LEARNING_RATE = 0.1


@dataclass(frozen=True)
class SeparabilityResult:
    accuracy: float
    param_count: int
    architecture: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy {self.accuracy} outside [0, 1]")
        if self.param_count < 1:
            raise ValidationError("parameter count must be positive")


def _param_count(dim: int, width: int, depth: int) -> int:
    if width == 0:
        return dim + 1
    count = dim * width + width
    count += (depth - 1) * (width * width + width)
    count += width + 1
    return count


class _Classifier:
    """Tiny ReLU MLP with a sigmoid head, trained by mini-batch SGD."""

    def __init__(self, dim: int, width: int, depth: int, rng: np.random.Generator):
        sizes = [dim] + [width] * (depth if width else 0) + [1]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def _forward(self, x: np.ndarray):
        acts = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            acts.append(h)
        logits = h @ self.weights[-1] + self.biases[-1]
        return logits[:, 0], acts

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        logits, _ = self._forward(x)
        return 1.0 / (1.0 + np.exp(-logits))

    def train_epoch(self, x, y, rng: np.random.Generator, lr: float, batch: int) -> None:
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch):
            idx = order[start : start + batch]
            xb, yb = x[idx], y[idx]
            logits, acts = self._forward(xb)
            prob = 1.0 / (1.0 + np.exp(-logits))
            grad = (prob - yb)[:, None] / len(xb)  # dBCE/dlogits
            for layer in range(len(self.weights) - 1, -1, -1):
                a = acts[layer]
                gw = a.T @ grad
                gb = grad.sum(axis=0)
                if layer > 0:
                    grad = (grad @ self.weights[layer].T) * (acts[layer] > 0)
                self.weights[layer] -= lr * gw
                self.biases[layer] -= lr * gb

    def snapshot(self):
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def restore(self, snap) -> None:
        self.weights = [w.copy() for w in snap[0]]
        self.biases = [b.copy() for b in snap[1]]


def _stratified_split(n0: int, n1: int, rng: np.random.Generator):
    """80/20 split indices per class over the stacked [real; synth] layout."""
    train, val = [], []
    for offset, count in ((0, n0), (n0, n1)):
        order = rng.permutation(count) + offset
        cut = max(1, int(round(count * 0.8)))
        cut = min(cut, count - 1)
        train.extend(order[:cut])
        val.extend(order[cut:])
    return np.array(sorted(train)), np.array(sorted(val))


def separability(real: EmbeddingSet, synth: EmbeddingSet, seed: int = 0) -> SeparabilityResult:
    """Best held-out real-vs-synthetic accuracy over the classifier grid.

    Ties between architectures go to the smaller parameter count.
    Deterministic per seed.
    """
    if len(real) < MIN_POINTS_PER_SIDE or len(synth) < MIN_POINTS_PER_SIDE:
        raise ValidationError(
            f"separability needs >= {MIN_POINTS_PER_SIDE} points per side"
        )
    if real.dim != synth.dim:
        raise ValidationError("embedding sets must share dimensionality")

    x = np.vstack([real.rows, synth.rows]).astype(np.float64)
    y = np.concatenate([np.zeros(len(real)), np.ones(len(synth))])

    master = np.random.default_rng(seed)
    split_rng = np.random.default_rng(master.integers(2**63))
    train_idx, val_idx = _stratified_split(len(real), len(synth), split_rng)
    x_train, y_train = x[train_idx], y[train_idx]
    x_val, y_val = x[val_idx], y[val_idx]

    mean = x_train.mean(axis=0)
    std = np.maximum(x_train.std(axis=0), 1e-8)
    x_train = (x_train - mean) / std
    x_val = (x_val - mean) / std

    dim = x.shape[1]
    best: tuple[float, int, str] | None = None
    for width, depth in ARCHITECTURE_GRID:
        arch_rng = np.random.default_rng(master.integers(2**63))
        clf = _Classifier(dim, width, depth, arch_rng)
        best_acc = float(np.mean((clf.predict_proba(x_val) >= 0.5) == y_val))
        stale = 0
        for _ in range(EPOCHS):
            clf.train_epoch(x_train, y_train, arch_rng, LEARNING_RATE, BATCH_SIZE)
            acc = float(np.mean((clf.predict_proba(x_val) >= 0.5) == y_val))
            if acc > best_acc:
                best_acc = acc
                stale = 0
            else:
                stale += 1
                if stale >= PATIENCE:
                    break
        params = _param_count(dim, width, depth)
        name = "linear" if width == 0 else f"mlp{depth}x{width}"
        if best is None or best_acc > best[0] or (best_acc == best[0] and params < best[1]):
            best = (best_acc, params, name)
    return SeparabilityResult(accuracy=best[0], param_count=best[1], architecture=best[2])
