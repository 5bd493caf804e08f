"""Predictive/conditional entropy and usable-information from detection logs.

Both entropies reduce to the mean of -log2 of the probability a detector
assigned to each matched ground-truth class; the usable information is
their difference (predictive minus conditional), reported as-is even
when negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import DetectionLog
from .errors import ValidationError

DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class EntropyReport:
    h_y: float            # predictive entropy, bits
    h_y_given_x: float    # conditional entropy, bits
    v_information: float  # h_y - h_y_given_x, bits

    def __post_init__(self) -> None:
        if self.h_y < 0 or self.h_y_given_x < 0:
            raise ValidationError("entropies must be nonnegative")
        if self.v_information != self.h_y - self.h_y_given_x:
            raise ValidationError("v_information must equal h_y - h_y_given_x")


def entropy_from_log(log: DetectionLog, eps: float = DEFAULT_EPS) -> float:
    """Mean -log2 probability on the ground-truth class, in bits.

    Probabilities are clamped below at ``eps`` so unmatched objects
    (logged with probability zero) contribute a finite maximum penalty.
    """
    if not 0.0 < eps < 0.5:
        raise ValidationError(f"eps={eps} outside (0, 0.5)")
    probs = np.maximum(log.probabilities(), eps)
    return float(np.mean(-np.log2(probs)))


def v_information(
    predictive: DetectionLog, conditional: DetectionLog, eps: float = DEFAULT_EPS
) -> EntropyReport:
    """Usable information: predictive entropy minus conditional entropy."""
    if predictive.source_mode != "predictive":
        raise ValidationError(
            f"first log has mode {predictive.source_mode!r}, expected 'predictive'"
        )
    if conditional.source_mode != "conditional":
        raise ValidationError(
            f"second log has mode {conditional.source_mode!r}, expected 'conditional'"
        )
    h_y = entropy_from_log(predictive, eps)
    h_y_given_x = entropy_from_log(conditional, eps)
    return EntropyReport(
        h_y=h_y, h_y_given_x=h_y_given_x, v_information=h_y - h_y_given_x
    )
