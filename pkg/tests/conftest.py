"""Shared test helpers: random sparse matrices and synthetic datasets."""

from __future__ import annotations

import os

import numpy as np
import pytest

from xmlridge.data import Dataset
from xmlridge.sparse import SparseMatrix


def random_csr(rng, rows, cols, density=0.3, nonneg=False) -> SparseMatrix:
    """Random canonical CSR matrix with no zero values."""
    offsets = np.zeros(rows + 1, dtype=np.int64)
    all_cols, all_vals = [], []
    for i in range(rows):
        nnz = rng.binomial(cols, density)
        picked = np.sort(rng.choice(cols, size=nnz, replace=False))
        vals = rng.uniform(0.5, 2.0, size=nnz)
        if not nonneg:
            vals *= rng.choice([-1.0, 1.0], size=nnz)
        all_cols.append(picked)
        all_vals.append(vals)
        offsets[i + 1] = offsets[i] + nnz
    return SparseMatrix(
        rows, cols, offsets,
        np.concatenate(all_cols) if all_cols else np.zeros(0, dtype=np.int64),
        np.concatenate(all_vals) if all_vals else np.zeros(0),
    )


def random_binary_csr(rng, rows, cols, avg_per_row=2.0) -> SparseMatrix:
    """Random binary label matrix; rows may be empty."""
    offsets = np.zeros(rows + 1, dtype=np.int64)
    all_cols = []
    p = min(avg_per_row / cols, 1.0)
    for i in range(rows):
        nnz = rng.binomial(cols, p)
        picked = np.sort(rng.choice(cols, size=nnz, replace=False))
        all_cols.append(picked)
        offsets[i + 1] = offsets[i] + nnz
    cols_arr = np.concatenate(all_cols) if all_cols else np.zeros(0, dtype=np.int64)
    return SparseMatrix(rows, cols, offsets, cols_arr, np.ones(len(cols_arr)))


def synthetic_dataset(rng, n_instances, n_labels, feats_per_label=3, noise_features=5,
                      labels_per_instance=(1, 3)) -> Dataset:
    """Learnable dataset: each label owns a block of indicator features.

    Instances activate the feature blocks of their labels (plus a little
    noise), so a linear model can recover the labels almost perfectly.
    """
    n_features = n_labels * feats_per_label + noise_features
    feat_offsets = np.zeros(n_instances + 1, dtype=np.int64)
    lab_offsets = np.zeros(n_instances + 1, dtype=np.int64)
    f_cols, f_vals, l_cols = [], [], []
    for i in range(n_instances):
        count = rng.integers(labels_per_instance[0], labels_per_instance[1] + 1)
        labs = np.sort(rng.choice(n_labels, size=count, replace=False))
        cols = {}
        for lab in labs:
            for j in range(feats_per_label):
                cols[lab * feats_per_label + j] = 1.0 + 0.1 * rng.standard_normal()
        for _ in range(rng.integers(0, 3)):
            j = n_labels * feats_per_label + rng.integers(noise_features)
            cols[int(j)] = rng.uniform(0.2, 0.8)
        ordered = sorted(cols.items())
        f_cols.extend(c for c, _ in ordered)
        f_vals.extend(v for _, v in ordered)
        feat_offsets[i + 1] = feat_offsets[i] + len(ordered)
        l_cols.extend(int(l) for l in labs)
        lab_offsets[i + 1] = lab_offsets[i] + len(labs)
    features = SparseMatrix(
        n_instances, n_features, feat_offsets,
        np.asarray(f_cols, dtype=np.int64), np.asarray(f_vals),
    )
    labels = SparseMatrix(
        n_instances, n_labels, lab_offsets,
        np.asarray(l_cols, dtype=np.int64), np.ones(len(l_cols)),
    )
    return Dataset(features, labels)


def _bibtex_paths():
    train = os.environ.get("XMLRIDGE_BIBTEX_TRAIN")
    test = os.environ.get("XMLRIDGE_BIBTEX_TEST")
    if train and test:
        return train, test
    base = os.path.join(os.path.dirname(__file__), "data", "bibtex")
    train = os.path.join(base, "train.txt")
    test = os.path.join(base, "test.txt")
    if os.path.exists(train) and os.path.exists(test):
        return train, test
    return None


@pytest.fixture(scope="session")
def bibtex_paths():
    """(train, test) paths of the real Bibtex benchmark, else skip.

    Place the repository-format files at tests/data/bibtex/{train,test}.txt
    or point XMLRIDGE_BIBTEX_TRAIN / XMLRIDGE_BIBTEX_TEST at them.
    """
    paths = _bibtex_paths()
    if paths is None:
        pytest.skip("Bibtex dataset not available (see README: reproducing the benchmark rows)")
    return paths


def _eurlex_paths():
    train = os.environ.get("XMLRIDGE_EURLEX_TRAIN")
    test = os.environ.get("XMLRIDGE_EURLEX_TEST")
    if train and test:
        return train, test
    base = os.path.join(os.path.dirname(__file__), "data", "eurlex")
    train = os.path.join(base, "train.txt")
    test = os.path.join(base, "test.txt")
    if os.path.exists(train) and os.path.exists(test):
        return train, test
    return None


@pytest.fixture(scope="session")
def eurlex_paths():
    paths = _eurlex_paths()
    if paths is None:
        pytest.skip("Eurlex-4K dataset not available (see README: reproducing the benchmark rows)")
    return paths
