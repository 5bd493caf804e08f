"""CART regression trees and a bootstrap-aggregated forest.

Plain least-squares trees: each split minimizes the summed squared error
of the two children, candidate features are subsampled per split, and
forest predictions average the trees. Trees serialize to nested dicts so
models round-trip through JSON.
"""

from __future__ import annotations

import numpy as np


def _best_split(x: np.ndarray, y: np.ndarray, feature_ids: np.ndarray, min_leaf: int):
    """Best (feature, threshold) by SSE reduction, or None if unsplittable."""
    n = y.size
    best_gain = 0.0
    best = None
    base = y.sum() ** 2 / n
    for f in feature_ids:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        csum = np.cumsum(ys)
        total = csum[-1]
        sizes = np.arange(1, n)
        valid = (xs[:-1] < xs[1:]) & (sizes >= min_leaf) & (n - sizes >= min_leaf)
        if not valid.any():
            continue
        left = csum[:-1]
        score = left**2 / sizes + (total - left) ** 2 / (n - sizes)
        score[~valid] = -np.inf
        i = int(np.argmax(score))
        gain = score[i] - base
        if gain > best_gain + 1e-12:
            best_gain = gain
            best = (int(f), float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _build(x, y, min_leaf: int, n_candidates: int, rng: np.random.Generator) -> dict:
    if y.size < 2 * min_leaf or np.all(y == y[0]):
        return {"value": float(y.mean())}
    n_features = x.shape[1]
    feature_ids = rng.choice(n_features, size=min(n_candidates, n_features),
                             replace=False)
    split = _best_split(x, y, np.sort(feature_ids), min_leaf)
    if split is None:
        return {"value": float(y.mean())}
    f, threshold = split
    mask = x[:, f] <= threshold
    return {
        "feature": f,
        "threshold": threshold,
        "left": _build(x[mask], y[mask], min_leaf, n_candidates, rng),
        "right": _build(x[~mask], y[~mask], min_leaf, n_candidates, rng),
    }


def _predict_one(node: dict, row: np.ndarray) -> float:
    while "value" not in node:
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    return node["value"]


class RegressionForest:
    """Bootstrap-sampled CART trees with mean aggregation."""

    def __init__(
        self,
        n_trees: int = 100,
        min_leaf: int = 2,
        trees: list[dict] | None = None,
    ):
        self.n_trees = n_trees
        self.min_leaf = min_leaf
        self.trees: list[dict] = trees or []

    def fit(self, x: np.ndarray, y: np.ndarray, seed: int) -> "RegressionForest":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, n_features = x.shape
        n_candidates = max(1, int(np.ceil(np.sqrt(n_features))))
        streams = np.random.SeedSequence(seed).spawn(self.n_trees)
        self.trees = []
        for stream in streams:
            rng = np.random.default_rng(stream)
            picks = rng.integers(0, n, size=n)
            self.trees.append(
                _build(x[picks], y[picks], self.min_leaf, n_candidates, rng)
            )
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape[0])
        for tree in self.trees:
            out += [_predict_one(tree, row) for row in x]
        return out / len(self.trees)

    def to_dict(self) -> dict:
        return {"n_trees": self.n_trees, "min_leaf": self.min_leaf, "trees": self.trees}

    @classmethod
    def from_dict(cls, payload: dict) -> "RegressionForest":
        return cls(
            n_trees=int(payload["n_trees"]),
            min_leaf=int(payload["min_leaf"]),
            trees=list(payload["trees"]),
        )
