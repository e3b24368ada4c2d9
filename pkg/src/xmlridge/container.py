"""Self-describing binary container for models and reduction transforms.

Layout (all integers little-endian):

    bytes 0-3   magic  b"XRDG"
    byte  4     format version (currently 1)
    byte  5     kind: 1 ridge model, 2 SVD transform, 3 random projection
    byte  6     payload: 0 dense, 1 CSR
    byte  7     reserved (0)
    u32         metadata length, then that many bytes of UTF-8 JSON
    payload     dense: u64 rows, u64 cols, rows*cols f64
                CSR:   u64 rows, u64 cols, u64 nnz,
                       (rows+1) i64 offsets, nnz i64 indices, nnz f64 values

Metadata JSON is serialized with sorted keys so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json
import struct
from typing import Union

import numpy as np

from xmlridge.errors import ParseError
from xmlridge.sparse import SparseMatrix

MAGIC = b"XRDG"
VERSION = 1

KIND_MODEL = 1
KIND_SVD = 2
KIND_RANDOM_PROJECTION = 3

_PAYLOAD_DENSE = 0
_PAYLOAD_CSR = 1

Matrix = Union[np.ndarray, SparseMatrix]


def write_container(path: str, kind: int, meta: dict, matrix: Matrix) -> None:
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = _PAYLOAD_CSR if isinstance(matrix, SparseMatrix) else _PAYLOAD_DENSE
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BBBB", VERSION, kind, payload, 0))
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        if isinstance(matrix, SparseMatrix):
            fh.write(struct.pack("<QQQ", matrix.rows, matrix.cols, matrix.nnz))
            fh.write(matrix.row_offsets.astype("<i8").tobytes())
            fh.write(matrix.col_indices.astype("<i8").tobytes())
            fh.write(matrix.values.astype("<f8").tobytes())
        else:
            dense = np.ascontiguousarray(matrix, dtype=np.float64)
            fh.write(struct.pack("<QQ", dense.shape[0], dense.shape[1]))
            fh.write(dense.astype("<f8").tobytes())


def _take(buf: bytes, offset: int, count: int, what: str) -> tuple[bytes, int]:
    if offset + count > len(buf):
        raise ParseError(f"container truncated while reading {what}")
    return buf[offset : offset + count], offset + count


def read_container(path: str) -> tuple[int, dict, Matrix]:
    """Return (kind, metadata, matrix) from a container file."""
    with open(path, "rb") as fh:
        buf = fh.read()
    head, off = _take(buf, 0, 8, "header")
    if head[:4] != MAGIC:
        raise ParseError(f"{path!r} is not a model container (bad magic)")
    version, kind, payload, _ = struct.unpack("<BBBB", head[4:])
    if version != VERSION:
        raise ParseError(f"unsupported container version {version}")
    raw, off = _take(buf, off, 4, "metadata length")
    (meta_len,) = struct.unpack("<I", raw)
    raw, off = _take(buf, off, meta_len, "metadata")
    meta = json.loads(raw.decode("utf-8"))

    if payload == _PAYLOAD_DENSE:
        raw, off = _take(buf, off, 16, "matrix dims")
        rows, cols = struct.unpack("<QQ", raw)
        raw, off = _take(buf, off, rows * cols * 8, "matrix values")
        matrix: Matrix = np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy()
    elif payload == _PAYLOAD_CSR:
        raw, off = _take(buf, off, 24, "matrix dims")
        rows, cols, nnz = struct.unpack("<QQQ", raw)
        raw, off = _take(buf, off, (rows + 1) * 8, "row offsets")
        offsets = np.frombuffer(raw, dtype="<i8").astype(np.int64)
        raw, off = _take(buf, off, nnz * 8, "column indices")
        indices = np.frombuffer(raw, dtype="<i8").astype(np.int64)
        raw, off = _take(buf, off, nnz * 8, "values")
        values = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        matrix = SparseMatrix(int(rows), int(cols), offsets, indices, values)
    else:
        raise ParseError(f"unknown payload format {payload}")
    if off != len(buf):
        raise ParseError(f"{len(buf) - off} trailing bytes after container payload")
    return kind, meta, matrix
