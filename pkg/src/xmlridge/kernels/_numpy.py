"""Pure numpy/scipy implementations of the hot kernels.

Used when the compiled extension is unavailable (or disabled via the
``XMLRIDGE_NO_NATIVE`` environment variable). Semantics are identical to
the native kernels; `tests/test_kernels.py` asserts equivalence.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

NAME = "numpy"


def _as_csr(indptr, indices, data, n_cols):
    n_rows = indptr.shape[0] - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n_rows, n_cols))


def gram_upper(indptr, indices, data, n_cols):
    """Dense symmetric M^T M of a CSR matrix, lower triangle mirrored from upper."""
    m = _as_csr(indptr, indices, data, n_cols)
    g = np.asarray((m.T @ m).todense())
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def csr_dense_matmul(indptr, indices, data, b):
    """CSR (rows x n) times dense (n x m), dense row-major result."""
    b = np.ascontiguousarray(b, dtype=np.float64)
    m = _as_csr(indptr, indices, data, b.shape[0])
    return np.ascontiguousarray(m @ b)


def csr_csr_matmul_dense(a_indptr, a_indices, a_data, b_indptr, b_indices, b_data, b_cols):
    """CSR times CSR with a dense result."""
    b_rows = b_indptr.shape[0] - 1
    a = _as_csr(a_indptr, a_indices, a_data, b_rows)
    b = _as_csr(b_indptr, b_indices, b_data, b_cols)
    return np.asarray((a @ b).todense())


def topk_dense(scores, k):
    """Per-row top-k of a dense score block.

    Rows of the result are ordered by descending score; equal scores break
    toward the lower column index. Returns (ids, scores) arrays of shape
    (rows, k).
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if k < 1 or k > scores.shape[1]:
        raise ValueError(f"k must be in [1, {scores.shape[1]}], got {k}")
    # Stable sort on negated scores keeps the lowest index first among ties.
    order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    return order.astype(np.int64), np.take_along_axis(scores, order, axis=1)
