"""Inverse-propensity label weights for boosting tail-label predictions.

Each label's weight grows as its training frequency shrinks:

    theta_l = 1 + (ln(N) - 1) * (B + 1)^A * (N_l + B)^(-A)

with N the number of training instances and N_l the label's count in the
training split. The propensity p_l = 1/theta_l is also the discount used
by propensity-scored precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from xmlridge.errors import DimensionMismatchError, ParseError
from xmlridge.sparse import SparseMatrix

DEFAULT_A = 0.55
DEFAULT_B = 1.5


@dataclass(frozen=True)
class PropensityModel:
    a_param: float
    b_param: float
    num_train: int
    weights: np.ndarray            # theta, one per label
    propensities: np.ndarray       # stored as exactly 1/weights
    label_counts: np.ndarray | None = None  # None when loaded from a weights file

    @property
    def num_labels(self) -> int:
        return len(self.weights)


def compute_propensity(
    label_counts: np.ndarray,
    num_train: int,
    a_param: float = DEFAULT_A,
    b_param: float = DEFAULT_B,
) -> PropensityModel:
    """Evaluate the weight formula for every label.

    Labels unseen in training (count 0) get the finite value the formula
    assigns at N_l = 0; they are not special-cased.
    """
    counts = np.asarray(label_counts, dtype=np.int64)
    if counts.ndim != 1:
        raise ValueError("label counts must be a 1-D array")
    if num_train < 2:
        raise ValueError(f"need at least 2 training instances, got {num_train}")
    if np.any(counts < 0):
        raise ValueError("label counts must be nonnegative")
    min_count = int(counts.min()) if len(counts) else 0
    if b_param <= -min_count:
        raise ValueError(f"b_param must exceed {-min_count} (smallest label count is {min_count})")

    scale = (math.log(num_train) - 1.0) * (b_param + 1.0) ** a_param
    weights = 1.0 + scale * np.power(counts + b_param, -a_param)
    if np.any(weights <= 0.0) or not np.all(np.isfinite(weights)):
        raise ValueError(
            f"parameters A={a_param}, B={b_param}, N={num_train} produce nonpositive weights"
        )
    return PropensityModel(
        a_param=a_param,
        b_param=b_param,
        num_train=int(num_train),
        weights=weights,
        propensities=1.0 / weights,
        label_counts=counts,
    )


def apply_weights(y: SparseMatrix, p: PropensityModel) -> SparseMatrix:
    """Scale every stored label entry by its label's weight."""
    if y.cols != p.num_labels:
        raise DimensionMismatchError(
            f"label matrix has {y.cols} columns but the propensity model covers {p.num_labels} labels"
        )
    return y.scale_columns(p.weights)


def save_propensity(p: PropensityModel, out: IO[str]) -> None:
    """Write a two-column ``label_id theta`` text file (with a header comment)."""
    out.write(f"# num_train={p.num_train} a={p.a_param!r} b={p.b_param!r}\n")
    for lab, theta in enumerate(p.weights):
        out.write(f"{lab} {theta!r}\n")


def load_propensity(source: IO[str]) -> PropensityModel:
    """Read a file written by save_propensity. Label counts are not recorded."""
    num_train, a_param, b_param = 0, math.nan, math.nan
    weights = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for field in line[1:].split():
                key, _, val = field.partition("=")
                if key == "num_train":
                    num_train = int(val)
                elif key == "a":
                    a_param = float(val)
                elif key == "b":
                    b_param = float(val)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'label_id theta', got {line!r}", line=lineno)
        lab, theta = int(parts[0]), float(parts[1])
        if lab != len(weights):
            raise ParseError(f"label ids must be consecutive from 0, got {lab}", line=lineno)
        weights.append(theta)
    w = np.asarray(weights)
    if len(w) == 0 or np.any(w <= 0):
        raise ParseError("weights file must list a positive weight per label")
    return PropensityModel(
        a_param=a_param, b_param=b_param, num_train=num_train,
        weights=w, propensities=1.0 / w, label_counts=None,
    )
