"""Training, scoring, ranked prediction and weight-matrix sparsification.

A trained model is just the dense (or threshold-sparsified) coefficient
matrix plus the hyperparameter and provenance needed to reproduce it.
Scoring an instance is a sparse gather over the matrix rows of its active
features, so prediction cost scales with the stored entries per row.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Union

import numpy as np

from xmlridge import kernels
from xmlridge.container import KIND_MODEL, read_container, write_container
from xmlridge.data import Dataset
from xmlridge.errors import DimensionMismatchError, ParseError
from xmlridge.solver import RidgeSolveConfig, solve_ridge
from xmlridge.sparse import SparseMatrix
from xmlridge.weighting import PropensityModel, apply_weights

DEFAULT_ROW_BLOCK = 1024

WeightMatrix = Union[np.ndarray, SparseMatrix]


@dataclass(frozen=True)
class RankedPrediction:
    """Top-K labels of one instance, scores strictly nonincreasing.

    Ties are broken toward the lower label id, so predictions are
    deterministic functions of the score vector.
    """

    label_ids: np.ndarray
    scores: np.ndarray


@dataclass(frozen=True)
class RidgeModel:
    weights: WeightMatrix
    lam: float
    weighting_applied: bool
    provenance: dict = field(default_factory=dict)

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def label_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def is_sparse(self) -> bool:
        return isinstance(self.weights, SparseMatrix)


def train(
    d: Dataset,
    cfg: RidgeSolveConfig,
    propensity: PropensityModel | None = None,
    provenance: dict | None = None,
) -> RidgeModel:
    """Fit the closed-form ridge coefficients, optionally label-weighted."""
    if d.num_instances == 0:
        raise ValueError("cannot train on an empty dataset")
    if propensity is not None and propensity.num_labels != d.num_labels:
        raise DimensionMismatchError(
            f"dataset has {d.num_labels} labels but the propensity model covers "
            f"{propensity.num_labels}"
        )
    y = apply_weights(d.labels, propensity) if propensity is not None else d.labels
    w = solve_ridge(d.features, y, cfg)
    return RidgeModel(
        weights=w,
        lam=cfg.lam,
        weighting_applied=propensity is not None,
        provenance=dict(provenance or {}),
    )


def _score_block(xs: SparseMatrix | np.ndarray, lo: int, hi: int, w: WeightMatrix) -> np.ndarray:
    if isinstance(xs, SparseMatrix):
        base = xs.row_offsets[lo]
        indptr = xs.row_offsets[lo : hi + 1] - base
        indices = xs.col_indices[base : xs.row_offsets[hi]]
        values = xs.values[base : xs.row_offsets[hi]]
        if isinstance(w, SparseMatrix):
            return kernels.csr_csr_matmul_dense(
                indptr, indices, values, w.row_offsets, w.col_indices, w.values, w.cols
            )
        return kernels.csr_dense_matmul(indptr, indices, values, w)
    block = xs[lo:hi]
    if isinstance(w, SparseMatrix):
        return np.ascontiguousarray(block @ w.to_scipy())
    return block @ w


def score_instance(m: RidgeModel, x: SparseMatrix) -> np.ndarray:
    """Scores for all labels of a single instance (a 1-row sparse matrix)."""
    if x.rows != 1:
        raise DimensionMismatchError(f"expected a single-row matrix, got {x.rows} rows")
    if x.cols != m.feature_dim:
        raise DimensionMismatchError(
            f"instance has {x.cols} features but the model expects {m.feature_dim}"
        )
    return _score_block(x, 0, 1, m.weights)[0]


def predict_topk(
    m: RidgeModel,
    xs: SparseMatrix | np.ndarray,
    k: int,
    row_block: int = DEFAULT_ROW_BLOCK,
    threads: int = 1,
) -> list[RankedPrediction]:
    """Top-k labels per instance, scores descending, ties to lower label id."""
    n_rows, n_cols = xs.shape
    if n_cols != m.feature_dim:
        raise DimensionMismatchError(
            f"instances have {n_cols} features but the model expects {m.feature_dim}"
        )
    if not 1 <= k <= m.label_dim:
        raise ValueError(f"k must be in [1, {m.label_dim}], got {k}")

    blocks = [(lo, min(lo + row_block, n_rows)) for lo in range(0, n_rows, row_block)]

    def run(block: tuple[int, int]):
        lo, hi = block
        scores = _score_block(xs, lo, hi, m.weights)
        return kernels.topk_dense(scores, k)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]

    preds: list[RankedPrediction] = []
    for ids, scores in results:
        for r in range(ids.shape[0]):
            preds.append(RankedPrediction(ids[r], scores[r]))
    return preds


def sparsify(m: RidgeModel, threshold: float) -> tuple[RidgeModel, float]:
    """Drop entries with magnitude below the threshold from storage.

    Returns the sparsified model and the fraction of the N*L cells still
    stored. A zero threshold only drops exact zeros, so predictions are
    unchanged.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    cells = m.feature_dim * m.label_dim
    if isinstance(m.weights, SparseMatrix):
        w = m.weights
        keep = (np.abs(w.values) >= threshold) & (w.values != 0.0)
        counts = np.diff(w.row_offsets)
        row_ids = np.repeat(np.arange(w.rows), counts)
        offsets = np.zeros(w.rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(row_ids[keep], minlength=w.rows), out=offsets[1:])
        new_w = SparseMatrix(w.rows, w.cols, offsets, w.col_indices[keep], w.values[keep])
    else:
        dense = np.where((np.abs(m.weights) >= threshold) & (m.weights != 0.0), m.weights, 0.0)
        new_w = SparseMatrix.from_dense(dense)
    provenance = dict(m.provenance)
    provenance["sparsify_threshold"] = max(threshold, float(provenance.get("sparsify_threshold", 0.0)))
    kept = new_w.nnz / cells if cells else 0.0
    return (
        RidgeModel(new_w, m.lam, m.weighting_applied, provenance),
        kept,
    )


def save_model(m: RidgeModel, path: str) -> None:
    meta = {
        "lambda": m.lam,
        "weighting_applied": m.weighting_applied,
        "provenance": m.provenance,
    }
    write_container(path, KIND_MODEL, meta, m.weights)


def load_model(path: str) -> RidgeModel:
    kind, meta, matrix = read_container(path)
    if kind != KIND_MODEL:
        raise ParseError(f"{path!r} holds a reduction transform, not a model")
    return RidgeModel(
        weights=matrix,
        lam=float(meta["lambda"]),
        weighting_applied=bool(meta["weighting_applied"]),
        provenance=meta.get("provenance", {}),
    )


def write_predictions(preds: list[RankedPrediction], out: IO[str]) -> None:
    """One line per instance: space-separated ``label:score``, descending."""
    for p in preds:
        out.write(" ".join(f"{int(l)}:{s!r}" for l, s in zip(p.label_ids, p.scores)) + "\n")


def export_text(m: RidgeModel, out: IO[str]) -> None:
    """Debug-friendly text dump: header then one ``feature label value`` per entry."""
    kind = "csr" if m.is_sparse else "dense"
    out.write(f"# ridge-model {m.feature_dim} {m.label_dim} lambda={m.lam!r} "
              f"weighted={int(m.weighting_applied)} storage={kind}\n")
    if isinstance(m.weights, SparseMatrix):
        for i in range(m.weights.rows):
            cols, vals = m.weights.row(i)
            for j, v in zip(cols, vals):
                out.write(f"{i} {int(j)} {v!r}\n")
    else:
        for i in range(m.weights.shape[0]):
            for j in range(m.weights.shape[1]):
                v = m.weights[i, j]
                if v != 0.0:
                    out.write(f"{i} {j} {v!r}\n")
