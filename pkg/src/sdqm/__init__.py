"""Synthetic dataset quality metrics for object detection.

Sub-metric computation over file-based dataset artifacts, an
evolutionary subset-selection harness, and a regression layer fusing
the sub-metrics into a single quality score.
"""

__version__ = "0.1.0"

from . import dataio, embedmetrics, evolve, fuse, statdist, structmetrics, vinfo
from .errors import (
    ConfigError,
    FormatError,
    SchemaMismatchError,
    SdqmError,
    ValidationError,
)

__all__ = [
    "__version__",
    "dataio",
    "embedmetrics",
    "evolve",
    "fuse",
    "statdist",
    "structmetrics",
    "vinfo",
    "SdqmError",
    "FormatError",
    "ValidationError",
    "ConfigError",
    "SchemaMismatchError",
]
