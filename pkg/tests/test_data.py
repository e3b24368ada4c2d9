"""Dataset parsing, normalization, concatenation and split behavior."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xmlridge.data import (
    Dataset,
    concat_features,
    l2_normalize_rows,
    load_dense_matrix,
    parse_dataset,
    serialize_dataset,
    split_indices,
    train_validation_split,
)
from xmlridge.errors import DimensionMismatchError, ParseError
from xmlridge.sparse import SparseMatrix

from conftest import random_csr


def parse_text(text):
    return parse_dataset(io.StringIO(text))


class TestParse:
    def test_basic_two_instances(self):
        d = parse_text("2 3 2\n0 0:1.0 2:0.5\n1 1:2.0\n")
        assert (d.num_instances, d.num_features, d.num_labels) == (2, 3, 2)
        assert d.features.nnz == 3
        assert d.labels.nnz == 2
        assert d.features.to_dense().tolist() == [[1.0, 0.0, 0.5], [0.0, 2.0, 0.0]]
        assert d.labels.to_dense().tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_multiple_labels_per_instance(self):
        d = parse_text("1 2 2\n0,1 0:1.0\n")
        assert d.labels.to_dense().tolist() == [[1.0, 1.0]]

    def test_empty_label_list_leading_space(self):
        d = parse_text("1 2 2\n 0:1.0 1:2.0\n")
        assert d.labels.nnz == 0
        assert d.features.nnz == 2

    def test_empty_line_is_empty_instance(self):
        d = parse_text("2 2 2\n0 0:1.0\n\n")
        assert d.features.row(1)[0].size == 0
        assert d.labels.row(1)[0].size == 0

    def test_crlf_accepted(self):
        d = parse_text("1 2 2\r\n0 1:3.5\r\n")
        assert d.features.values.tolist() == [3.5]

    def test_explicit_zero_value_dropped(self):
        d = parse_text("1 3 1\n0 0:1.0 1:0.0 2:2.0\n")
        assert d.features.nnz == 2
        d.features.validate()

    def test_unsorted_features_are_canonicalized(self):
        d = parse_text("1 3 1\n0 2:1.0 0:2.0\n")
        assert d.features.col_indices.tolist() == [0, 2]
        d.features.validate()

    def test_validates_canonical_invariants(self):
        d = parse_text("3 4 3\n0,2 0:1.0 3:-2.5\n 1:0.5\n1\n")
        d.features.validate()
        d.labels.validate()
        assert np.all(d.labels.values == 1.0)

    @pytest.mark.parametrize(
        "text, fragment, line",
        [
            ("", "header", 1),
            ("2 3\n", "header", 1),
            ("a b c\n", "header", 1),
            ("2 3 2\n0 0:1.0\n", "line count mismatch", None),
            ("1 3 2\n0 0:1.0\nextra\n", "line count mismatch", None),
            ("1 3 2\n0 3:1.0\n", "feature index 3 out of range", 2),
            ("1 3 2\n2 0:1.0\n", "label index 2 out of range", 2),
            ("1 3 2\n0 0:abc\n", "non-numeric feature value", 2),
            ("1 3 2\nx 0:1.0\n", "non-numeric label", 2),
            ("1 3 2\n0 0:1.0 0:2.0\n", "duplicate feature index 0", 2),
            ("1 3 2\n0,0 1:1.0\n", "duplicate label index 0", 2),
            ("1 3 2\n0 0\n", "malformed feature token", 2),
            ("1 3 2\n0 0:inf\n", "non-finite", 2),
        ],
    )
    def test_errors_name_line(self, text, fragment, line):
        with pytest.raises(ParseError) as err:
            parse_text(text)
        assert fragment in str(err.value)
        if line is not None:
            assert f"line {line}:" in str(err.value)


@st.composite
def canonical_datasets(draw):
    rows = draw(st.integers(0, 8))
    n = draw(st.integers(1, 12))
    l = draw(st.integers(1, 6))
    nonzero = st.floats(allow_nan=False, allow_infinity=False, width=64).filter(
        lambda v: v != 0.0
    )
    f_offsets = [0]
    f_cols, f_vals, l_offsets, l_cols = [], [], [0], []
    for _ in range(rows):
        cols = sorted(draw(st.lists(st.integers(0, n - 1), unique=True, max_size=5)))
        f_cols.extend(cols)
        f_vals.extend(draw(st.lists(nonzero, min_size=len(cols), max_size=len(cols))))
        f_offsets.append(len(f_cols))
        labs = sorted(draw(st.lists(st.integers(0, l - 1), unique=True, max_size=3)))
        l_cols.extend(labs)
        l_offsets.append(len(l_cols))
    features = SparseMatrix(rows, n, np.array(f_offsets), np.array(f_cols, dtype=np.int64),
                            np.array(f_vals))
    labels = SparseMatrix(rows, l, np.array(l_offsets), np.array(l_cols, dtype=np.int64),
                          np.ones(len(l_cols)))
    return Dataset(features, labels)


@given(canonical_datasets())
@settings(max_examples=60, deadline=None)
def test_parse_serialize_roundtrip(d):
    buf = io.StringIO()
    serialize_dataset(d, buf)
    back = parse_dataset(io.StringIO(buf.getvalue()))
    assert back.features.equals(d.features)
    assert back.labels.equals(d.labels)


class TestNormalize:
    def test_three_four_five(self):
        m = SparseMatrix.from_dense(np.array([[3.0, 4.0]]))
        out = l2_normalize_rows(m)
        np.testing.assert_allclose(out.to_dense(), [[0.6, 0.8]])

    def test_single_entry(self):
        m = SparseMatrix.from_dense(np.array([[0.0, 5.0]]))
        assert l2_normalize_rows(m).values.tolist() == [1.0]

    def test_empty_row_unchanged(self):
        m = SparseMatrix.from_dense(np.array([[0.0, 0.0], [1.0, 1.0]]))
        out = l2_normalize_rows(m)
        assert out.row(0)[0].size == 0

    def test_unit_norms_and_idempotence(self):
        rng = np.random.default_rng(7)
        m = random_csr(rng, 20, 15, density=0.4)
        once = l2_normalize_rows(m)
        norms = np.linalg.norm(once.to_dense(), axis=1)
        nonempty = np.diff(m.row_offsets) > 0
        np.testing.assert_allclose(norms[nonempty], 1.0, atol=1e-12)
        twice = l2_normalize_rows(once)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-12)


class TestConcat:
    def test_dense_block_shifted(self):
        sparse = SparseMatrix.from_dense(np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]]))
        dense = np.array([[4.0, 0.0], [0.0, 5.0]])
        out = concat_features(sparse, dense)
        assert out.cols == 5
        expected = np.array([[1.0, 0.0, 2.0, 4.0, 0.0], [0.0, 3.0, 0.0, 0.0, 5.0]])
        np.testing.assert_array_equal(out.to_dense(), expected)
        out.validate()

    def test_zero_dense_block(self):
        sparse = SparseMatrix.from_dense(np.array([[1.0, 2.0]]))
        out = concat_features(sparse, np.zeros((1, 3)))
        assert out.cols == 5
        assert out.nnz == sparse.nnz
        np.testing.assert_array_equal(out.col_indices, sparse.col_indices)

    def test_row_mismatch(self):
        sparse = SparseMatrix.from_dense(np.zeros((2, 2)))
        with pytest.raises(DimensionMismatchError):
            concat_features(sparse, np.zeros((3, 1)))

    def test_preserves_every_entry(self):
        rng = np.random.default_rng(3)
        sparse = random_csr(rng, 10, 6, density=0.5)
        dense = rng.standard_normal((10, 4))
        dense[rng.random((10, 4)) < 0.3] = 0.0
        out = concat_features(sparse, dense)
        expected = np.hstack([sparse.to_dense(), dense])
        np.testing.assert_array_equal(out.to_dense(), expected)
        assert out.nnz == sparse.nnz + np.count_nonzero(dense)
        out.validate()


class TestSplit:
    def test_sizes(self):
        rng = np.random.default_rng(0)
        d = Dataset(random_csr(rng, 10, 4), random_csr(rng, 10, 3, density=0.2))
        train, val = train_validation_split(d, 0.1, seed=1)
        assert (train.num_instances, val.num_instances) == (9, 1)
        assert train.num_features == d.num_features
        assert val.num_labels == d.num_labels

    def test_deterministic_per_seed(self):
        a = split_indices(50, 0.2, seed=9)
        b = split_indices(50, 0.2, seed=9)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_different_seeds_differ(self):
        # Two seeds agreeing on a 10-of-100 subset has probability ~1/C(100,10).
        a = split_indices(100, 0.1, seed=1)
        b = split_indices(100, 0.1, seed=2)
        assert not np.array_equal(a[1], b[1])

    def test_partition_exact(self):
        train_idx, val_idx = split_indices(37, 0.25, seed=4)
        merged = np.concatenate([train_idx, val_idx])
        assert np.array_equal(np.sort(merged), np.arange(37))

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.5, 1.5])
    def test_fraction_out_of_range(self, fraction):
        with pytest.raises(ValueError):
            split_indices(10, fraction, seed=0)

    def test_rows_carried_intact(self):
        rng = np.random.default_rng(11)
        d = Dataset(random_csr(rng, 12, 5), random_csr(rng, 12, 4, density=0.3))
        train, val = train_validation_split(d, 0.25, seed=2)
        train_idx, val_idx = split_indices(12, 0.25, seed=2)
        np.testing.assert_array_equal(train.features.to_dense(), d.features.to_dense()[train_idx])
        np.testing.assert_array_equal(val.labels.to_dense(), d.labels.to_dense()[val_idx])


class TestDenseLoader:
    def test_text_matrix(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1.0 2.0\n3.0 4.0\n")
        out = load_dense_matrix(str(path), rows=2)
        np.testing.assert_array_equal(out, [[1.0, 2.0], [3.0, 4.0]])

    def test_raw_binary_matrix(self, tmp_path):
        a = np.arange(6, dtype="<f8").reshape(3, 2)
        path = tmp_path / "emb.bin"
        path.write_bytes(a.tobytes())
        out = load_dense_matrix(str(path), rows=3)
        np.testing.assert_array_equal(out, a)

    def test_row_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1.0 2.0\n")
        with pytest.raises(DimensionMismatchError):
            load_dense_matrix(str(path), rows=2)
