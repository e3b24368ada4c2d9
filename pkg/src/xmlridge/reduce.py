"""Feature dimensionality reduction: truncated SVD and sparse random projection.

The SVD path uses a randomized range finder with a few power iterations,
which recovers the top singular subspace to working accuracy at a fraction
of the cost of a dense decomposition. The random projection uses the
sparse +/-1 scheme whose entries are 0 with probability 1 - density and
+/-1/sqrt(density * d) with probability density/2 each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from xmlridge.container import (
    KIND_RANDOM_PROJECTION,
    KIND_SVD,
    read_container,
    write_container,
)
from xmlridge.errors import DimensionMismatchError, ParseError
from xmlridge.sparse import SparseMatrix


@dataclass(frozen=True)
class ReductionTransform:
    kind: str  # "svd" | "random_projection"
    projection: np.ndarray | SparseMatrix  # (n_in, d)
    d: int
    seed: int
    density: float | None = None  # random_projection only

    @property
    def n_in(self) -> int:
        return self.projection.shape[0]


def fit_truncated_svd(
    x: SparseMatrix,
    d: int,
    oversample: int = 10,
    power_iters: int = 2,
    seed: int = 0,
) -> ReductionTransform:
    """Approximate top-d right singular vectors via randomized range finding."""
    n_rows, n_cols = x.shape
    if not 1 <= d <= min(n_rows, n_cols):
        raise ValueError(f"d must be in [1, {min(n_rows, n_cols)}], got {d}")
    if oversample < 0 or power_iters < 0:
        raise ValueError("oversample and power_iters must be nonnegative")
    rng = np.random.default_rng(seed)
    xs = x.to_scipy()
    p = min(d + oversample, min(n_rows, n_cols))
    sketch = rng.standard_normal((n_cols, p))
    q, _ = np.linalg.qr(xs @ sketch)
    for _ in range(power_iters):
        z, _ = np.linalg.qr(xs.T @ q)
        q, _ = np.linalg.qr(xs @ z)
    b = np.asarray(xs.T @ q).T  # p x n_cols
    _, _, vt = np.linalg.svd(b, full_matrices=False)
    return ReductionTransform(kind="svd", projection=np.ascontiguousarray(vt[:d].T), d=d, seed=seed)


def fit_sparse_random_projection(
    n_in: int,
    d: int,
    density: float | None = None,
    seed: int = 0,
) -> ReductionTransform:
    """Random sparse sign matrix preserving pairwise distances in expectation."""
    if d < 1:
        raise ValueError(f"target dimension must be positive, got {d}")
    if n_in < 1:
        raise ValueError(f"input dimension must be positive, got {n_in}")
    if density is None:
        density = 1.0 / math.sqrt(n_in)
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    scale = 1.0 / math.sqrt(density * d)
    offsets = np.zeros(n_in + 1, dtype=np.int64)
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for i in range(n_in):
        nnz = int(rng.binomial(d, density))
        if nnz:
            positions = np.sort(rng.choice(d, size=nnz, replace=False))
            signs = rng.integers(0, 2, size=nnz) * 2 - 1
            cols.append(positions.astype(np.int64))
            vals.append(signs * scale)
        offsets[i + 1] = offsets[i] + nnz
    projection = SparseMatrix(
        n_in, d, offsets,
        np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64),
        np.concatenate(vals) if vals else np.zeros(0),
    )
    return ReductionTransform(
        kind="random_projection", projection=projection, d=d, seed=seed, density=density
    )


def apply_reduction(t: ReductionTransform, x: SparseMatrix) -> np.ndarray:
    """Project features into the reduced space; returns a dense D x d matrix."""
    if x.cols != t.n_in:
        raise DimensionMismatchError(
            f"input has {x.cols} features but the transform expects {t.n_in}"
        )
    if isinstance(t.projection, SparseMatrix):
        return np.asarray((x.to_scipy() @ t.projection.to_scipy()).todense())
    return np.ascontiguousarray(x.to_scipy() @ t.projection)


def save_transform(t: ReductionTransform, path: str) -> None:
    kind = KIND_SVD if t.kind == "svd" else KIND_RANDOM_PROJECTION
    meta = {"d": t.d, "seed": t.seed, "density": t.density}
    write_container(path, kind, meta, t.projection)


def load_transform(path: str) -> ReductionTransform:
    kind, meta, matrix = read_container(path)
    if kind == KIND_SVD:
        name = "svd"
    elif kind == KIND_RANDOM_PROJECTION:
        name = "random_projection"
    else:
        raise ParseError(f"{path!r} holds a model, not a reduction transform")
    return ReductionTransform(
        kind=name,
        projection=matrix,
        d=int(meta["d"]),
        seed=int(meta["seed"]),
        density=meta.get("density"),
    )
