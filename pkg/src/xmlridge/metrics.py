"""Ranked-retrieval metrics and label-distribution analyses.

Precision@K averages the hit fraction of each instance's top K predictions
over the whole test set; its propensity-scored variant upweights hits on
rare labels by 1/p_l. Instances with no true labels still count in the
denominator. Summations use ``math.fsum`` so results do not depend on
reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from xmlridge.data import Dataset
from xmlridge.errors import DimensionMismatchError
from xmlridge.model import RankedPrediction
from xmlridge.sparse import SparseMatrix
from xmlridge.weighting import PropensityModel


@dataclass(frozen=True)
class MetricsReport:
    k_values: list[int]
    precision_at: list[float]
    psp_at: list[float] | None
    num_test: int
    psp_normalized_at: list[float] | None = None


def _check_preds(preds: Sequence[RankedPrediction], truth: SparseMatrix, k: int) -> None:
    if len(preds) != truth.rows:
        raise DimensionMismatchError(
            f"{len(preds)} predictions for {truth.rows} truth rows"
        )
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    for p in preds:
        if len(p.label_ids) < k:
            raise ValueError(f"predictions carry {len(p.label_ids)} labels, need at least {k}")


def _hits(pred: RankedPrediction, truth: SparseMatrix, row: int, k: int) -> np.ndarray:
    """Boolean mask over the first k predicted labels: true label or not."""
    true_cols, _ = truth.row(row)
    wanted = pred.label_ids[:k]
    pos = np.searchsorted(true_cols, wanted)
    pos = np.minimum(pos, max(len(true_cols) - 1, 0))
    if len(true_cols) == 0:
        return np.zeros(k, dtype=bool)
    return true_cols[pos] == wanted


def precision_at_k(preds: Sequence[RankedPrediction], truth: SparseMatrix, k: int) -> float:
    """Fraction of top-k slots holding a true label, averaged over instances."""
    _check_preds(preds, truth, k)
    if not preds:
        return 0.0
    total = sum(int(_hits(p, truth, i, k).sum()) for i, p in enumerate(preds))
    return total / (k * len(preds))


def psp_at_k(
    preds: Sequence[RankedPrediction], truth: SparseMatrix, p: PropensityModel, k: int
) -> float:
    """Propensity-scored precision: each hit counts 1/p of its label."""
    _check_preds(preds, truth, k)
    if np.any(p.propensities <= 0.0):
        raise ValueError("propensities must be positive")
    if not preds:
        return 0.0
    contributions = []
    for i, pred in enumerate(preds):
        mask = _hits(pred, truth, i, k)
        if mask.any():
            contributions.append(math.fsum(1.0 / p.propensities[pred.label_ids[:k][mask]]))
    return math.fsum(contributions) / (k * len(preds))


def psp_ideal_at_k(truth: SparseMatrix, p: PropensityModel, k: int) -> float:
    """Best achievable propensity-scored precision for this truth matrix."""
    contributions = []
    for i in range(truth.rows):
        true_cols, _ = truth.row(i)
        if len(true_cols) == 0:
            continue
        theta = np.sort(p.weights[true_cols])[::-1]
        contributions.append(math.fsum(theta[:k]))
    if not contributions or truth.rows == 0:
        return 0.0
    return math.fsum(contributions) / (k * truth.rows)


def psp_at_k_normalized(
    preds: Sequence[RankedPrediction], truth: SparseMatrix, p: PropensityModel, k: int
) -> float:
    """Raw propensity-scored precision divided by the ideal ranking's score."""
    ideal = psp_ideal_at_k(truth, p, k)
    if ideal == 0.0:
        return 0.0
    return psp_at_k(preds, truth, p, k) / ideal


def evaluate(
    preds: Sequence[RankedPrediction],
    truth: SparseMatrix,
    k_values: Sequence[int],
    propensity: PropensityModel | None = None,
    normalized: bool = False,
) -> MetricsReport:
    """Bundle P@K (and PSP@K when a propensity model is given) for every K."""
    ks = list(k_values)
    precision = [precision_at_k(preds, truth, k) for k in ks]
    psp = psp_norm = None
    if propensity is not None:
        psp = [psp_at_k(preds, truth, propensity, k) for k in ks]
        if normalized:
            psp_norm = [psp_at_k_normalized(preds, truth, propensity, k) for k in ks]
    return MetricsReport(
        k_values=ks, precision_at=precision, psp_at=psp,
        num_test=truth.rows, psp_normalized_at=psp_norm,
    )


def label_frequency_histogram(d: Dataset) -> list[tuple[int, int]]:
    """(label_id, count) pairs sorted by descending count, ties by label id."""
    counts = np.bincount(d.labels.col_indices, minlength=d.num_labels).astype(np.int64)
    order = np.lexsort((np.arange(d.num_labels), -counts))
    return [(int(l), int(counts[l])) for l in order]


def label_contribution_at_k(
    preds: Sequence[RankedPrediction],
    truth: SparseMatrix,
    k: int,
    freq_order: Sequence[int],
) -> np.ndarray:
    """Correct-prediction counts per label, reported in frequency order.

    The total equals k * num_test * P@k (every counted pair is one hit).
    """
    _check_preds(preds, truth, k)
    order = np.asarray(freq_order, dtype=np.int64)
    if len(order) != truth.cols or not np.array_equal(np.sort(order), np.arange(truth.cols)):
        raise ValueError("freq_order must be a permutation of all label ids")
    counts = np.zeros(truth.cols, dtype=np.int64)
    for i, pred in enumerate(preds):
        mask = _hits(pred, truth, i, k)
        np.add.at(counts, pred.label_ids[:k][mask], 1)
    return counts[order]


def format_report_table(report: MetricsReport) -> str:
    """Aligned text table; metric values are shown as percentages."""
    headers = ["K", "P@K(%)"]
    if report.psp_at is not None:
        headers.append("PSP@K(%)")
    if report.psp_normalized_at is not None:
        headers.append("PSP@K-norm(%)")
    rows = []
    for i, k in enumerate(report.k_values):
        row = [str(k), f"{100 * report.precision_at[i]:.2f}"]
        if report.psp_at is not None:
            row.append(f"{100 * report.psp_at[i]:.2f}")
        if report.psp_normalized_at is not None:
            row.append(f"{100 * report.psp_normalized_at[i]:.2f}")
        rows.append(row)
    widths = [max(len(h), *(len(r[c]) for r in rows)) for c, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    for row in rows:
        lines.append("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    lines.append(f"instances: {report.num_test}")
    return "\n".join(lines)


def report_to_csv(report: MetricsReport, out: IO[str]) -> None:
    """CSV rows ``k,p_at_k,psp_at_k[,psp_normalized_at_k]`` with raw fractions."""
    header = "k,p_at_k"
    if report.psp_at is not None:
        header += ",psp_at_k"
    if report.psp_normalized_at is not None:
        header += ",psp_normalized_at_k"
    out.write(header + "\n")
    for i, k in enumerate(report.k_values):
        row = f"{k},{report.precision_at[i]!r}"
        if report.psp_at is not None:
            row += f",{report.psp_at[i]!r}"
        if report.psp_normalized_at is not None:
            row += f",{report.psp_normalized_at[i]!r}"
        out.write(row + "\n")


def histogram_to_csv(hist: list[tuple[int, int]], out: IO[str]) -> None:
    out.write("label_id,count\n")
    for lab, count in hist:
        out.write(f"{lab},{count}\n")


def contribution_to_csv(
    contribution: np.ndarray, freq_order: Sequence[int], out: IO[str]
) -> None:
    out.write("frequency_rank,label_id,hits\n")
    for rank, (lab, hits) in enumerate(zip(freq_order, contribution)):
        out.write(f"{rank},{int(lab)},{int(hits)}\n")
