"""Dataset text format, feature normalization, concatenation and splits.

The on-disk format is the multilabel text convention used by the public
extreme-classification benchmark collections: a header line ``D N L`` with
instance, feature and label counts, followed by one line per instance of
the form ``l1,l2,... f1:v1 f2:v2 ...``. An empty label list is written as
a leading space. UTF-8 with LF or CRLF line endings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from xmlridge.errors import DimensionMismatchError, ParseError
from xmlridge.sparse import SparseMatrix


@dataclass(frozen=True)
class Dataset:
    """Sparse features paired with binary sparse labels, row-aligned."""

    features: SparseMatrix
    labels: SparseMatrix

    def __post_init__(self):
        if self.features.rows != self.labels.rows:
            raise DimensionMismatchError(
                f"features have {self.features.rows} rows but labels have {self.labels.rows}"
            )

    @property
    def num_instances(self) -> int:
        return self.features.rows

    @property
    def num_features(self) -> int:
        return self.features.cols

    @property
    def num_labels(self) -> int:
        return self.labels.cols


def parse_dataset(source: Iterable[str]) -> Dataset:
    """Parse the benchmark text format from an iterable of lines.

    Raises ParseError (with the offending 1-based line number) on a
    malformed header, a line count mismatch, out-of-range indices,
    non-numeric values or duplicate indices within a line.
    """
    it = iter(source)
    try:
        header = next(it)
    except StopIteration:
        raise ParseError("empty input, expected 'D N L' header", line=1) from None
    parts = header.split()
    if len(parts) != 3:
        raise ParseError(f"header must be three integers 'D N L', got {header.strip()!r}", line=1)
    try:
        num_rows, num_features, num_labels = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"header must be three integers 'D N L', got {header.strip()!r}", line=1) from None
    if num_rows < 0 or num_features < 0 or num_labels < 0:
        raise ParseError("header counts must be nonnegative", line=1)

    feat_offsets = np.zeros(num_rows + 1, dtype=np.int64)
    label_offsets = np.zeros(num_rows + 1, dtype=np.int64)
    feat_cols: list[int] = []
    feat_vals: list[float] = []
    label_cols: list[int] = []

    for i in range(num_rows):
        lineno = i + 2
        try:
            raw = next(it)
        except StopIteration:
            raise ParseError(
                f"line count mismatch: header declares {num_rows} instances, found {i}",
                line=lineno,
            ) from None
        line = raw.rstrip("\r\n")

        if line.startswith(" ") or line == "":
            label_part, feat_part = "", line
        else:
            label_part, _, feat_part = line.partition(" ")

        if label_part:
            try:
                ids = [int(tok) for tok in label_part.split(",")]
            except ValueError:
                raise ParseError(f"non-numeric label id in {label_part!r}", line=lineno) from None
            ids.sort()
            for pos, lab in enumerate(ids):
                if lab < 0 or lab >= num_labels:
                    raise ParseError(f"label index {lab} out of range (L={num_labels})", line=lineno)
                if pos and ids[pos - 1] == lab:
                    raise ParseError(f"duplicate label index {lab}", line=lineno)
            label_cols.extend(ids)
            label_offsets[i + 1] = label_offsets[i] + len(ids)
        else:
            label_offsets[i + 1] = label_offsets[i]

        row_feats: list[tuple[int, float]] = []
        for tok in feat_part.split():
            name, sep, sval = tok.partition(":")
            if not sep:
                raise ParseError(f"malformed feature token {tok!r}, expected 'index:value'", line=lineno)
            try:
                j = int(name)
            except ValueError:
                raise ParseError(f"non-numeric feature index in {tok!r}", line=lineno) from None
            try:
                v = float(sval)
            except ValueError:
                raise ParseError(f"non-numeric feature value in {tok!r}", line=lineno) from None
            if j < 0 or j >= num_features:
                raise ParseError(f"feature index {j} out of range (N={num_features})", line=lineno)
            if not math.isfinite(v):
                raise ParseError(f"non-finite feature value in {tok!r}", line=lineno)
            row_feats.append((j, v))
        row_feats.sort(key=lambda jv: jv[0])
        for pos in range(1, len(row_feats)):
            if row_feats[pos - 1][0] == row_feats[pos][0]:
                raise ParseError(f"duplicate feature index {row_feats[pos][0]}", line=lineno)
        kept = [(j, v) for j, v in row_feats if v != 0.0]
        feat_cols.extend(j for j, _ in kept)
        feat_vals.extend(v for _, v in kept)
        feat_offsets[i + 1] = feat_offsets[i] + len(kept)

    extra = sum(1 for _ in it)
    if extra:
        raise ParseError(
            f"line count mismatch: header declares {num_rows} instances, found {num_rows + extra}",
            line=num_rows + 2,
        )

    features = SparseMatrix(
        num_rows, num_features, feat_offsets,
        np.asarray(feat_cols, dtype=np.int64), np.asarray(feat_vals, dtype=np.float64),
    )
    labels = SparseMatrix(
        num_rows, num_labels, label_offsets,
        np.asarray(label_cols, dtype=np.int64), np.ones(len(label_cols)),
    )
    return Dataset(features, labels)


def serialize_dataset(d: Dataset, out: IO[str]) -> None:
    """Inverse of parse_dataset; round-trips canonical datasets exactly."""
    out.write(f"{d.num_instances} {d.num_features} {d.num_labels}\n")
    for i in range(d.num_instances):
        lab_cols, _ = d.labels.row(i)
        feat_cols, feat_vals = d.features.row(i)
        labels = ",".join(str(int(l)) for l in lab_cols)
        feats = " ".join(f"{int(j)}:{v!r}" for j, v in zip(feat_cols, feat_vals))
        out.write((labels + " " + feats).rstrip(" ") + "\n")


def load_dataset(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh)


def save_dataset(d: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        serialize_dataset(d, fh)


def l2_normalize_rows(m: SparseMatrix) -> SparseMatrix:
    """Scale each nonempty row to unit Euclidean norm; empty rows unchanged."""
    counts = np.diff(m.row_offsets)
    row_ids = np.repeat(np.arange(m.rows), counts)
    sq = np.bincount(row_ids, weights=m.values**2, minlength=m.rows)
    norms = np.sqrt(sq)
    inv = np.ones(m.rows)
    nonempty = norms > 0.0
    inv[nonempty] = 1.0 / norms[nonempty]
    return SparseMatrix(m.rows, m.cols, m.row_offsets, m.col_indices, m.values * inv[row_ids])


def concat_features(sparse: SparseMatrix, dense: np.ndarray) -> SparseMatrix:
    """Append dense columns to a sparse matrix, dropping dense zeros.

    The dense block lands at column indices shifted by ``sparse.cols``.
    """
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 2:
        raise DimensionMismatchError("dense block must be a 2-D matrix")
    if dense.shape[0] != sparse.rows:
        raise DimensionMismatchError(
            f"row-count mismatch: sparse has {sparse.rows} rows, dense has {dense.shape[0]}"
        )
    counts_s = np.diff(sparse.row_offsets)
    mask = dense != 0.0
    counts_d = mask.sum(axis=1).astype(np.int64)
    new_counts = counts_s + counts_d
    offsets = np.zeros(sparse.rows + 1, dtype=np.int64)
    np.cumsum(new_counts, out=offsets[1:])

    total = int(offsets[-1])
    cols = np.empty(total, dtype=np.int64)
    vals = np.empty(total)

    # Sparse part keeps its columns; positions shift by the dense entries
    # of the preceding rows.
    pos_s = (
        np.arange(sparse.nnz, dtype=np.int64)
        - np.repeat(sparse.row_offsets[:-1], counts_s)
        + np.repeat(offsets[:-1], counts_s)
    )
    cols[pos_s] = sparse.col_indices
    vals[pos_s] = sparse.values

    r, c = np.nonzero(mask)  # row-major: ascending columns within each row
    excl = np.zeros(sparse.rows, dtype=np.int64)
    np.cumsum(counts_d[:-1], out=excl[1:])
    rank = np.arange(len(r), dtype=np.int64) - np.repeat(excl, counts_d)
    pos_d = np.repeat(offsets[:-1] + counts_s, counts_d) + rank
    cols[pos_d] = sparse.cols + c
    vals[pos_d] = dense[r, c]

    return SparseMatrix(sparse.rows, sparse.cols + dense.shape[1], offsets, cols, vals)


def split_indices(num_instances: int, validation_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, validation) row indices of a uniform random split."""
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError(f"validation fraction must be in (0, 1), got {validation_fraction}")
    val_size = int(round(validation_fraction * num_instances))
    if val_size < 1 or val_size >= num_instances:
        raise ValueError(
            f"validation fraction {validation_fraction} leaves no usable split for {num_instances} instances"
        )
    perm = np.random.default_rng(seed).permutation(num_instances)
    return np.sort(perm[val_size:]), np.sort(perm[:val_size])


def train_validation_split(d: Dataset, validation_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint (train, validation) row partition, deterministic per seed."""
    train_idx, val_idx = split_indices(d.num_instances, validation_fraction, seed)
    train = Dataset(d.features.take_rows(train_idx), d.labels.take_rows(train_idx))
    val = Dataset(d.features.take_rows(val_idx), d.labels.take_rows(val_idx))
    return train, val


def load_dense_matrix(path: str, rows: int) -> np.ndarray:
    """Load a headerless dense embedding matrix with a known row count.

    Files ending in ``.bin``, ``.f64`` or ``.npy`` are binary (raw
    little-endian float64, or a numpy array file); anything else is text
    with one space-separated row per line.
    """
    if path.endswith(".npy"):
        a = np.load(path)
    elif path.endswith((".bin", ".f64")):
        flat = np.fromfile(path, dtype="<f8")
        if rows <= 0 or flat.size % rows:
            raise ParseError(
                f"binary matrix {path!r} has {flat.size} values, not divisible by {rows} rows"
            )
        a = flat.reshape(rows, flat.size // rows)
    else:
        a = np.loadtxt(path, dtype=np.float64, ndmin=2)
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.shape[0] != rows:
        raise DimensionMismatchError(f"embedding matrix has {a.shape[0]} rows, expected {rows}")
    if not np.all(np.isfinite(a)):
        raise ParseError(f"embedding matrix {path!r} contains non-finite values")
    return a
