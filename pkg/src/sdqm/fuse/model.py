"""Fitting, applying, and serializing the score-fusion regressor."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import FormatError, SchemaMismatchError, ValidationError
from .features import FeatureRow, SubMetricVector, build_feature_row, default_groups
from .trees import RegressionForest

MODEL_FORMAT_VERSION = 1

KINDS = ("random_forest", "linear", "ridge")

RIDGE_PENALTY = 1.0
FOREST_TREES = 100
FOREST_MIN_LEAF = 2


@dataclass
class RegressorModel:
    """A fitted fusion regressor plus its feature-name schema."""

    kind: str
    feature_names: tuple[str, ...]
    groups: tuple[str, ...]
    params: dict
    seed: int

    def predict(self, rows: Sequence[FeatureRow]) -> np.ndarray:
        x = _stack(rows, self.feature_names)
        if self.kind == "random_forest":
            forest = RegressionForest.from_dict(self.params)
            return forest.predict(x)
        coef = np.asarray(self.params["coefficients"])
        intercept = float(self.params["intercept"])
        mean = np.asarray(self.params["feature_means"])
        scale = np.asarray(self.params["feature_scales"])
        return ((x - mean) / scale) @ coef + intercept


def _stack(rows: Sequence[FeatureRow], names: tuple[str, ...]) -> np.ndarray:
    if not rows:
        raise ValidationError("no feature rows given")
    for i, row in enumerate(rows):
        if row.names != tuple(names):
            raise SchemaMismatchError(
                f"row {i} schema {list(row.names)} does not match model schema {list(names)}"
            )
    return np.stack([row.values for row in rows])


def _fit_linear_like(x: np.ndarray, y: np.ndarray, penalty: float) -> dict:
    spread = np.ptp(x, axis=0)
    if not (spread > 0).any():
        raise ValidationError("degenerate design: all feature rows identical")
    mean = x.mean(axis=0)
    scale = np.where(spread > 0, x.std(axis=0), 1.0)
    scale = np.maximum(scale, 1e-12)
    z = (x - mean) / scale
    y_mean = float(y.mean())
    if penalty > 0:
        gram = z.T @ z + penalty * np.eye(z.shape[1])
        coef = np.linalg.solve(gram, z.T @ (y - y_mean))
    else:
        # minimum-norm least squares; tolerates constant feature columns
        coef = np.linalg.lstsq(z, y - y_mean, rcond=None)[0]
    return {
        "coefficients": coef.tolist(),
        "intercept": y_mean,
        "feature_means": mean.tolist(),
        "feature_scales": scale.tolist(),
        "penalty": penalty,
    }


def fit(
    rows: Sequence[FeatureRow],
    labels: Sequence[float],
    kind: str = "random_forest",
    seed: int = 0,
    groups: Sequence[str] | None = None,
) -> RegressorModel:
    """Fit a fusion regressor on engineered feature rows.

    Labels are detector scores in [0, 1]. ``linear`` solves ordinary
    least squares (a zero-penalty ridge path), ``ridge`` adds an L2 term
    on the standardized coefficients, and ``random_forest`` grows
    bootstrap CART trees.
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown regressor kind {kind!r}")
    if len(rows) < 10:
        raise ValidationError("need at least 10 training rows")
    if len(rows) != len(labels):
        raise ValidationError("row/label count mismatch")
    y = np.asarray(labels, dtype=np.float64)
    if (y < 0).any() or (y > 1).any() or not np.isfinite(y).all():
        raise ValidationError("labels must lie in [0, 1]")
    names = rows[0].names
    x = _stack(rows, names)

    if kind == "random_forest":
        forest = RegressionForest(n_trees=FOREST_TREES, min_leaf=FOREST_MIN_LEAF)
        forest.fit(x, y, seed=seed)
        params = forest.to_dict()
    else:
        penalty = RIDGE_PENALTY if kind == "ridge" else 0.0
        params = _fit_linear_like(x, y, penalty)

    return RegressorModel(
        kind=kind,
        feature_names=tuple(names),
        groups=tuple(groups if groups is not None else default_groups()),
        params=params,
        seed=seed,
    )


def predict_sdqm(model: RegressorModel, v: SubMetricVector) -> float:
    """Score one sub-metric vector with a fitted model.

    The vector is expanded with the model's own group set; any schema
    disagreement is an error rather than a silent reorder.
    """
    row = build_feature_row(v, groups=model.groups)
    if row.names != model.feature_names:
        raise SchemaMismatchError(
            f"feature schema mismatch: model {list(model.feature_names)} "
            f"vs vector {list(row.names)}"
        )
    return float(model.predict([row])[0])


def save_model(model: RegressorModel, path: str | Path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "groups": list(model.groups),
        "seed": model.seed,
        "params": model.params,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> RegressorModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot load model {path}: {exc}") from exc
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported model format version {payload.get('format_version')}"
        )
    return RegressorModel(
        kind=payload["kind"],
        feature_names=tuple(payload["feature_names"]),
        groups=tuple(payload["groups"]),
        params=payload["params"],
        seed=int(payload["seed"]),
    )
