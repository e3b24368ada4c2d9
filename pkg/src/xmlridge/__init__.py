"""Closed-form ridge regression for extreme multi-label classification.

Training solves a regularized least-squares problem with an exact
factorization-based solution, optionally against inverse-propensity
weighted labels to favor rare (tail) labels. Evaluation covers P@K and
propensity-scored P@K plus the label-distribution analyses used to study
tail behavior.
"""

from xmlridge.data import (
    Dataset,
    concat_features,
    l2_normalize_rows,
    load_dataset,
    parse_dataset,
    serialize_dataset,
    train_validation_split,
)
from xmlridge.kernels import BACKEND, HAVE_NATIVE
from xmlridge.metrics import (
    MetricsReport,
    evaluate,
    label_contribution_at_k,
    label_frequency_histogram,
    precision_at_k,
    psp_at_k,
    psp_at_k_normalized,
)
from xmlridge.model import (
    RankedPrediction,
    RidgeModel,
    load_model,
    predict_topk,
    save_model,
    score_instance,
    sparsify,
    train,
)
from xmlridge.reduce import (
    ReductionTransform,
    apply_reduction,
    fit_sparse_random_projection,
    fit_truncated_svd,
)
from xmlridge.solver import RidgeSolveConfig, gram_dual, gram_primal, solve_ridge, solve_spd
from xmlridge.sparse import SparseMatrix
from xmlridge.weighting import PropensityModel, apply_weights, compute_propensity

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HAVE_NATIVE",
    "Dataset",
    "MetricsReport",
    "PropensityModel",
    "RankedPrediction",
    "ReductionTransform",
    "RidgeModel",
    "RidgeSolveConfig",
    "SparseMatrix",
    "apply_reduction",
    "apply_weights",
    "compute_propensity",
    "concat_features",
    "evaluate",
    "fit_sparse_random_projection",
    "fit_truncated_svd",
    "gram_dual",
    "gram_primal",
    "l2_normalize_rows",
    "label_contribution_at_k",
    "label_frequency_histogram",
    "load_dataset",
    "load_model",
    "parse_dataset",
    "precision_at_k",
    "predict_topk",
    "psp_at_k",
    "psp_at_k_normalized",
    "save_model",
    "score_instance",
    "serialize_dataset",
    "solve_ridge",
    "solve_spd",
    "sparsify",
    "train",
    "train_validation_split",
]
