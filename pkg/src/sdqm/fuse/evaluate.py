"""Correlation evaluation, k-fold validation, and feature reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from .features import FeatureRow
from .model import fit

REDUCTION_THRESHOLD = 0.01
REDUCTION_FOLDS = 5


def _ranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (ties share their mean rank)."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt((a @ a) * (b @ b))
    if denom == 0.0:
        raise ValidationError("correlation undefined for zero-variance input")
    return float((a @ b) / denom)


def correlation(predictions, labels) -> tuple[float, float]:
    """Sample Pearson r and Spearman rho (average-rank ties)."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size != y.size or p.size < 3:
        raise ValidationError("correlation needs >= 3 paired values")
    return _pearson(p, y), _pearson(_ranks(p), _ranks(y))


@dataclass
class KFoldReport:
    fold_pearson: list[float]
    fold_spearman: list[float]
    pooled_pearson: float
    pooled_spearman: float
    mean_pearson: float
    sd_pearson: float
    mean_spearman: float
    sd_spearman: float


def kfold_evaluate(
    rows: Sequence[FeatureRow],
    labels: Sequence[float],
    k: int,
    kind: str = "random_forest",
    seed: int = 0,
) -> KFoldReport:
    """Shuffled k-fold fit/evaluate with per-fold and pooled correlations.

    Folds too small for a correlation (fewer than 3 points, e.g.
    leave-one-out) contribute only to the pooled out-of-fold score; the
    reported mean/sd then fall back to the pooled values with zero sd.
    """
    if k < 2:
        raise ValidationError("k must be >= 2")
    n = len(rows)
    if k > n:
        raise ValidationError(f"k={k} exceeds row count {n}")
    y = np.asarray(labels, dtype=np.float64)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.array_split(order, k)

    pooled_pred = np.empty(n)
    fold_pearson: list[float] = []
    fold_spearman: list[float] = []
    for fold in folds:
        train_idx = np.setdiff1d(order, fold)
        model = fit([rows[i] for i in train_idx], y[train_idx], kind=kind, seed=seed)
        pred = model.predict([rows[i] for i in fold])
        pooled_pred[fold] = pred
        if fold.size >= 3 and np.ptp(pred) > 0 and np.ptp(y[fold]) > 0:
            r, rho = correlation(pred, y[fold])
            fold_pearson.append(r)
            fold_spearman.append(rho)

    pooled_r, pooled_rho = correlation(pooled_pred, y)
    if len(fold_pearson) == len(folds):
        mean_r, sd_r = float(np.mean(fold_pearson)), float(np.std(fold_pearson))
        mean_rho, sd_rho = float(np.mean(fold_spearman)), float(np.std(fold_spearman))
    else:
        mean_r, sd_r = pooled_r, 0.0
        mean_rho, sd_rho = pooled_rho, 0.0
    return KFoldReport(
        fold_pearson=fold_pearson,
        fold_spearman=fold_spearman,
        pooled_pearson=pooled_r,
        pooled_spearman=pooled_rho,
        mean_pearson=mean_r,
        sd_pearson=sd_r,
        mean_spearman=mean_rho,
        sd_spearman=sd_rho,
    )


@dataclass
class ReductionReport:
    retained: tuple[str, ...]
    removal_order: list[str] = field(default_factory=list)
    baseline_pearson: float = 0.0
    final_pearson: float = 0.0


def _subset_rows(rows: Sequence[FeatureRow], keep: Sequence[str]) -> list[FeatureRow]:
    keep_set = [n for n in rows[0].names if n in keep]
    idx = [rows[0].names.index(n) for n in keep_set]
    return [FeatureRow(names=tuple(keep_set), values=r.values[idx]) for r in rows]


def _cv_pearson(rows, labels, seed: int) -> float:
    report = kfold_evaluate(rows, labels, k=REDUCTION_FOLDS, kind="linear", seed=seed)
    return report.pooled_pearson


def backward_feature_reduction(
    rows: Sequence[FeatureRow],
    labels: Sequence[float],
    groups: dict[str, tuple[str, ...]],
    threshold: float = REDUCTION_THRESHOLD,
    seed: int = 0,
) -> ReductionReport:
    """Greedy group removal under a cross-validated linear baseline.

    Repeatedly removes the sub-metric group whose removal least hurts
    (or most helps) the cross-validated Pearson r, stopping when every
    candidate removal would cost more than ``threshold``.
    """
    if len(rows) < 20:
        raise ValidationError("backward reduction needs >= 20 rows")
    current = dict(groups)
    baseline = _cv_pearson(rows, labels, seed)
    score = baseline
    removal_order: list[str] = []
    while len(current) > 1:
        candidates = []
        for name in sorted(current):
            keep_terms = [
                t for g, terms in current.items() if g != name for t in terms
            ]
            r = _cv_pearson(_subset_rows(rows, keep_terms), labels, seed)
            candidates.append((r, name))
        best_r, best_name = max(candidates)
        if best_r < score - threshold:
            break
        score = best_r
        removal_order.append(best_name)
        del current[best_name]
    return ReductionReport(
        retained=tuple(sorted(current)),
        removal_order=removal_order,
        baseline_pearson=baseline,
        final_pearson=score,
    )
