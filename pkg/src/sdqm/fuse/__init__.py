"""Sub-metric fusion: feature engineering, regressors, and evaluation."""

from .features import (
    SUBMETRIC_FIELDS,
    GROUP_ORDER,
    DEFAULT_DROPPED,
    FeatureRow,
    SubMetricVector,
    build_feature_row,
    default_groups,
    group_term_names,
    read_submetric_csv,
    write_submetric_csv,
)
from .model import RegressorModel, fit, predict_sdqm, load_model, save_model
from .evaluate import (
    KFoldReport,
    ReductionReport,
    backward_feature_reduction,
    correlation,
    kfold_evaluate,
)

__all__ = [
    "SUBMETRIC_FIELDS",
    "GROUP_ORDER",
    "DEFAULT_DROPPED",
    "FeatureRow",
    "SubMetricVector",
    "build_feature_row",
    "default_groups",
    "group_term_names",
    "read_submetric_csv",
    "write_submetric_csv",
    "RegressorModel",
    "fit",
    "predict_sdqm",
    "load_model",
    "save_model",
    "KFoldReport",
    "ReductionReport",
    "backward_feature_reduction",
    "correlation",
    "kfold_evaluate",
]
