"""deepcwc: two-view collaborative representation classification.

A query is represented over all training samples in two feature spaces (raw
image vectors and externally extracted deep features), each class is scored
by its reconstruction residual in both spaces, the two residual vectors are
fused by an element-wise product, and the class with the minimal fused
residual wins.
"""

from .bench import (
    EvalReport,
    TimingRecord,
    TimingReport,
    dump_residuals,
    eval_fused,
    eval_single,
    time_runs,
)
from .crc import (
    ClassIndex,
    CrcModel,
    ResidualVector,
    class_residuals,
    fit,
    load_model,
    represent,
    save_model,
)
from .dataset import (
    LabeledDataset,
    PairedDataset,
    SplitSpec,
    load_dataset,
    pair_views,
    read_features,
    read_labels,
    split,
    write_features,
)
from .fusion import FusedDecision, classify, classify_single, fuse, fuse_additive
from .linalg import (
    DEFAULT_LAMBDA,
    FeatureMatrix,
    RidgeSolution,
    gram_accumulate,
    normalize_columns,
    projection_matrix,
    ridge_solve,
)

__version__ = "0.1.0"

__all__ = [
    "ClassIndex",
    "CrcModel",
    "DEFAULT_LAMBDA",
    "EvalReport",
    "FeatureMatrix",
    "FusedDecision",
    "LabeledDataset",
    "PairedDataset",
    "ResidualVector",
    "RidgeSolution",
    "SplitSpec",
    "TimingRecord",
    "TimingReport",
    "class_residuals",
    "classify",
    "classify_single",
    "dump_residuals",
    "eval_fused",
    "eval_single",
    "fit",
    "fuse",
    "fuse_additive",
    "gram_accumulate",
    "load_dataset",
    "load_model",
    "normalize_columns",
    "pair_views",
    "projection_matrix",
    "read_features",
    "read_labels",
    "represent",
    "ridge_solve",
    "save_model",
    "split",
    "time_runs",
    "write_features",
]
