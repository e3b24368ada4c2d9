"""Row-major compressed sparse matrices in canonical form.

Canonical means: column indices strictly increasing within each row, no
explicit zeros, and ``row_offsets`` nondecreasing with ``row_offsets[-1]``
equal to the number of stored values. All constructors in this module
produce canonical matrices; `validate` checks the invariants exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    rows: int
    cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "row_offsets", np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        )
        object.__setattr__(
            self, "col_indices", np.ascontiguousarray(self.col_indices, dtype=np.int64)
        )
        object.__setattr__(
            self, "values", np.ascontiguousarray(self.values, dtype=np.float64)
        )
        if self.row_offsets.shape != (self.rows + 1,):
            raise ValueError(
                f"row_offsets must have {self.rows + 1} entries, got {self.row_offsets.shape[0]}"
            )
        if self.col_indices.shape != self.values.shape:
            raise ValueError("col_indices and values must have equal length")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != self.values.shape[0]:
            raise ValueError("row_offsets must start at 0 and end at the number of stored values")

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def validate(self) -> None:
        """Check every canonical-form invariant; raises ValueError on violation."""
        counts = np.diff(self.row_offsets)
        if np.any(counts < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if self.nnz:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.cols:
                raise ValueError("column index out of range")
            row_ids = np.repeat(np.arange(self.rows), counts)
            same_row = row_ids[1:] == row_ids[:-1]
            if np.any(np.diff(self.col_indices)[same_row] <= 0):
                raise ValueError("column indices must be strictly increasing within each row")
            if np.any(self.values == 0.0):
                raise ValueError("explicit zeros are not allowed in canonical form")
            if not np.all(np.isfinite(self.values)):
                raise ValueError("stored values must be finite")

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Views of the column indices and values of row ``i``."""
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        counts = np.diff(self.row_offsets)
        row_ids = np.repeat(np.arange(self.rows), counts)
        out[row_ids, self.col_indices] = self.values
        return out

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        mask = a != 0.0
        counts = mask.sum(axis=1)
        offsets = np.zeros(a.shape[0] + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        r, c = np.nonzero(mask)
        return cls(a.shape[0], a.shape[1], offsets, c.astype(np.int64), a[r, c])

    @classmethod
    def from_coo(
        cls, rows: int, cols: int, r: np.ndarray, c: np.ndarray, v: np.ndarray
    ) -> "SparseMatrix":
        """Build from coordinate triplets; (r, c) pairs must be unique."""
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=np.float64)
        keep = v != 0.0
        r, c, v = r[keep], c[keep], v[keep]
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        offsets = np.zeros(rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=rows), out=offsets[1:])
        return cls(rows, cols, offsets, c, v)

    def take_rows(self, idx: np.ndarray) -> "SparseMatrix":
        """New matrix holding the given rows, in the given order."""
        idx = np.asarray(idx, dtype=np.int64)
        counts = np.diff(self.row_offsets)[idx]
        total = int(counts.sum())
        offsets = np.zeros(len(idx) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        starts = self.row_offsets[idx]
        pos = np.arange(total, dtype=np.int64) - np.repeat(offsets[:-1], counts) + np.repeat(starts, counts)
        return SparseMatrix(len(idx), self.cols, offsets, self.col_indices[pos], self.values[pos])

    def transpose(self) -> "SparseMatrix":
        counts = np.diff(self.row_offsets)
        row_ids = np.repeat(np.arange(self.rows, dtype=np.int64), counts)
        order = np.argsort(self.col_indices, kind="stable")
        offsets = np.zeros(self.cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.col_indices, minlength=self.cols), out=offsets[1:])
        return SparseMatrix(self.cols, self.rows, offsets, row_ids[order], self.values[order])

    def scale_columns(self, factors: np.ndarray) -> "SparseMatrix":
        """Multiply every stored entry by the factor of its column."""
        factors = np.asarray(factors, dtype=np.float64)
        if factors.shape != (self.cols,):
            raise ValueError(f"expected {self.cols} factors, got {factors.shape}")
        return SparseMatrix(
            self.rows, self.cols, self.row_offsets, self.col_indices,
            self.values * factors[self.col_indices],
        )

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=(self.rows, self.cols)
        )

    @classmethod
    def from_scipy(cls, m: sp.spmatrix) -> "SparseMatrix":
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        return cls(
            m.shape[0], m.shape[1],
            m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data.astype(np.float64),
        )

    def equals(self, other: "SparseMatrix") -> bool:
        """Exact structural and value equality."""
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )
