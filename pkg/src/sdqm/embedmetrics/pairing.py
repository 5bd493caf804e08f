"""Feature-extractor evaluation over matched real/synthetic image pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class PairingScores:
    cos_sum: float
    cos_mean: float
    euc_sum: float
    euc_mean: float


def extractor_pairing_eval(pairs) -> PairingScores:
    """Cosine similarity and Euclidean distance over feature-vector pairs.

    ``pairs`` is a sequence of (vector, vector); the two vectors of each
    pair must share dimensionality. Returns sums and means over pairs.
    """
    if len(pairs) == 0:
        raise ValidationError("extractor_pairing_eval needs at least one pair")
    cos = np.empty(len(pairs))
    euc = np.empty(len(pairs))
    for i, (a, b) in enumerate(pairs):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1:
            raise ValidationError(f"pair {i}: vectors must be 1-D and share shape")
        na = np.linalg.norm(a)
        nb = np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            raise ValidationError(f"pair {i}: zero-norm vector, cosine undefined")
        cos[i] = float(a @ b) / (na * nb)
        euc[i] = float(np.linalg.norm(a - b))
    return PairingScores(
        cos_sum=float(cos.sum()),
        cos_mean=float(cos.mean()),
        euc_sum=float(euc.sum()),
        euc_mean=float(euc.mean()),
    )
