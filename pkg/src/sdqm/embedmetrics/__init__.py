"""Embedding-space sub-metrics.

Everything here operates on pairs of :class:`~sdqm.dataio.EmbeddingSet`
values: divergence-frontier scores over quantized embeddings, the
precision/recall/authenticity triple, the log cluster metric, dataset
separability, and the feature-extractor pairing evaluation.
"""

from .quantize import QuantizedPair, kmeans, quantize, default_k
from .frontier import FrontierScores, frontier_scores
from .prdc import PrecisionRecallScores, precision_recall_authenticity
from .clusters import log_cluster, log_cluster_components, LOG_CLUSTER_EPS
from .separability import SeparabilityResult, separability
from .pairing import extractor_pairing_eval

__all__ = [
    "QuantizedPair",
    "kmeans",
    "quantize",
    "default_k",
    "FrontierScores",
    "frontier_scores",
    "PrecisionRecallScores",
    "precision_recall_authenticity",
    "log_cluster",
    "log_cluster_components",
    "LOG_CLUSTER_EPS",
    "SeparabilityResult",
    "separability",
    "extractor_pairing_eval",
]
