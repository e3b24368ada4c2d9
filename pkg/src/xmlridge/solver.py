"""Closed-form ridge solve with automatic primal/dual selection.

The normal equations admit two equivalent forms: factor an N x N gram
matrix (primal) or a D x D one (dual). ``auto`` picks whichever dimension
is smaller, so only a min(D, N) square matrix is ever factored. Systems
are solved with a Cholesky factorization; a single jitter escalation
covers rounding-induced pivot failures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.linalg import lapack

from xmlridge import kernels
from xmlridge.errors import CapacityError, DimensionMismatchError, SingularSystemError
from xmlridge.sparse import SparseMatrix

DEFAULT_MEMORY_BUDGET = 8 << 30  # bytes of dense gram storage
DEFAULT_LABEL_BLOCK = 512

_MODES = ("auto", "primal", "dual")


@dataclass(frozen=True)
class RidgeSolveConfig:
    lam: float
    mode: str = "auto"
    jitter: float | None = None  # None: 1e-10 * trace/n on pivot failure

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"regularization strength must be nonnegative, got {self.lam}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.jitter is not None and self.jitter < 0:
            raise ValueError(f"jitter must be nonnegative, got {self.jitter}")


def _check_gram_budget(n: int, memory_budget: int, advice: str) -> None:
    need = n * n * 8
    if need > memory_budget:
        raise CapacityError(
            f"dense {n}x{n} gram matrix needs {need / 2**30:.1f} GiB, "
            f"over the {memory_budget / 2**30:.1f} GiB budget; consider {advice} mode"
        )


def gram_primal(x: SparseMatrix | np.ndarray, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """Dense X^T X, exactly symmetric (computed upper triangle mirrored)."""
    if isinstance(x, SparseMatrix):
        _check_gram_budget(x.cols, memory_budget, "dual")
        return kernels.gram_upper(x.row_offsets, x.col_indices, x.values, x.cols)
    x = np.asarray(x, dtype=np.float64)
    _check_gram_budget(x.shape[1], memory_budget, "dual")
    g = x.T @ x
    return np.triu(g) + np.triu(g, 1).T


def gram_dual(x: SparseMatrix | np.ndarray, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """Dense X X^T, exactly symmetric (computed upper triangle mirrored)."""
    if isinstance(x, SparseMatrix):
        _check_gram_budget(x.rows, memory_budget, "primal")
        xt = x.transpose()
        return kernels.gram_upper(xt.row_offsets, xt.col_indices, xt.values, xt.cols)
    x = np.asarray(x, dtype=np.float64)
    _check_gram_budget(x.shape[0], memory_budget, "primal")
    g = x @ x.T
    return np.triu(g) + np.triu(g, 1).T


def _factor_spd(a: np.ndarray, jitter: float | None):
    """Cholesky factor of a symmetric matrix, with one jitter escalation."""
    c, info = lapack.dpotrf(a, lower=0, clean=0, overwrite_a=0)
    if info == 0:
        return c
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to dpotrf")
    n = a.shape[0]
    j = jitter if jitter is not None else 1e-10 * float(np.trace(a)) / max(n, 1)
    bumped = a.copy()
    bumped[np.diag_indices(n)] += j
    c, info = lapack.dpotrf(bumped, lower=0, clean=0, overwrite_a=1)
    if info > 0:
        raise SingularSystemError(
            f"matrix is not positive definite even with jitter {j:g}: "
            f"factorization failed at pivot {info} (1-based)",
            pivot=int(info),
        )
    return c


def solve_spd(a: np.ndarray, b: np.ndarray, jitter: float | None = None) -> np.ndarray:
    """Solve a Z = b for symmetric positive definite ``a`` via Cholesky."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatchError(
            f"right-hand side has {b.shape[0]} rows, system has {a.shape[0]}"
        )
    c = _factor_spd(a, jitter)
    return la.cho_solve((c, False), b)


def _dense_column_block(y: SparseMatrix | np.ndarray, lo: int, hi: int, csc_cache: dict) -> np.ndarray:
    if isinstance(y, SparseMatrix):
        if "csc" not in csc_cache:
            csc_cache["csc"] = y.to_scipy().tocsc()
        return np.asarray(csc_cache["csc"][:, lo:hi].todense())
    return y[:, lo:hi]


def solve_ridge(
    x: SparseMatrix | np.ndarray,
    y: SparseMatrix | np.ndarray,
    cfg: RidgeSolveConfig,
    label_block: int = DEFAULT_LABEL_BLOCK,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> np.ndarray:
    """Minimize ||Y - XW||_F^2 + lam ||W||_F^2 in closed form.

    Returns the dense N x L coefficient matrix. Right-hand sides are
    processed in column blocks to bound peak memory.
    """
    n_rows, n_feats = x.shape if isinstance(x, np.ndarray) else (x.rows, x.cols)
    y_rows, n_labels = y.shape if isinstance(y, np.ndarray) else (y.rows, y.cols)
    if y_rows != n_rows:
        raise DimensionMismatchError(
            f"feature matrix has {n_rows} rows but target matrix has {y_rows}"
        )
    mode = cfg.mode
    if mode == "auto":
        mode = "primal" if n_feats <= n_rows else "dual"

    w = np.empty((n_feats, n_labels))
    cache: dict = {}
    if mode == "primal":
        g = gram_primal(x, memory_budget)
        g[np.diag_indices(n_feats)] += cfg.lam
        c = _factor_spd(g, cfg.jitter)
        if isinstance(x, SparseMatrix) and isinstance(y, SparseMatrix):
            xty = (x.to_scipy().T @ y.to_scipy()).tocsc()
        for lo in range(0, max(n_labels, 1), label_block):
            hi = min(lo + label_block, n_labels)
            if lo >= hi:
                break
            if isinstance(x, SparseMatrix) and isinstance(y, SparseMatrix):
                rhs = np.asarray(xty[:, lo:hi].todense())
            elif isinstance(x, SparseMatrix):
                rhs = np.asarray(x.to_scipy().T @ y[:, lo:hi])
            else:
                rhs = x.T @ _dense_column_block(y, lo, hi, cache)
            w[:, lo:hi] = la.cho_solve((c, False), rhs)
    else:
        k = gram_dual(x, memory_budget)
        k[np.diag_indices(n_rows)] += cfg.lam
        c = _factor_spd(k, cfg.jitter)
        xt = x.to_scipy().T.tocsr() if isinstance(x, SparseMatrix) else None
        for lo in range(0, max(n_labels, 1), label_block):
            hi = min(lo + label_block, n_labels)
            if lo >= hi:
                break
            rhs = _dense_column_block(y, lo, hi, cache)
            z = la.cho_solve((c, False), rhs)
            w[:, lo:hi] = xt @ z if xt is not None else x.T @ z
    return w
