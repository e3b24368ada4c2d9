# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: gram accumulation, sparse scoring and top-k selection.

These are the inner loops that dominate training and prediction time. The
GIL is released inside every loop so callers can run row blocks on a thread
pool. Semantics match ``_numpy`` exactly.
"""

import numpy as np

from libc.stdint cimport int64_t

NAME = "native"


def gram_upper(indptr, indices, data, Py_ssize_t n_cols):
    """Dense symmetric M^T M of a CSR matrix, lower triangle mirrored from upper."""
    cdef const int64_t[::1] ip = indptr
    cdef const int64_t[::1] ix = indices
    cdef const double[::1] vs = data
    cdef Py_ssize_t n_rows = ip.shape[0] - 1
    out = np.zeros((n_cols, n_cols))
    cdef double[:, ::1] g = out
    cdef Py_ssize_t i, a, b, ja
    cdef double va
    with nogil:
        for i in range(n_rows):
            for a in range(ip[i], ip[i + 1]):
                ja = ix[a]
                va = vs[a]
                for b in range(a, ip[i + 1]):
                    g[ja, ix[b]] += va * vs[b]
        for i in range(n_cols):
            for a in range(i + 1, n_cols):
                g[a, i] = g[i, a]
    return out


def csr_dense_matmul(indptr, indices, data, b):
    """CSR (rows x n) times dense (n x m), dense row-major result."""
    cdef const int64_t[::1] ip = indptr
    cdef const int64_t[::1] ix = indices
    cdef const double[::1] vs = data
    bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:, ::1] bm = bb
    cdef Py_ssize_t n_rows = ip.shape[0] - 1
    cdef Py_ssize_t n_out = bm.shape[1]
    out = np.zeros((n_rows, n_out))
    cdef double[:, ::1] om = out
    cdef Py_ssize_t i, a, l, j
    cdef double v
    with nogil:
        for i in range(n_rows):
            for a in range(ip[i], ip[i + 1]):
                j = ix[a]
                v = vs[a]
                for l in range(n_out):
                    om[i, l] += v * bm[j, l]
    return out


def csr_csr_matmul_dense(a_indptr, a_indices, a_data, b_indptr, b_indices, b_data, Py_ssize_t b_cols):
    """CSR times CSR with a dense result."""
    cdef const int64_t[::1] aip = a_indptr
    cdef const int64_t[::1] aix = a_indices
    cdef const double[::1] avs = a_data
    cdef const int64_t[::1] bip = b_indptr
    cdef const int64_t[::1] bix = b_indices
    cdef const double[::1] bvs = b_data
    cdef Py_ssize_t n_rows = aip.shape[0] - 1
    out = np.zeros((n_rows, b_cols))
    cdef double[:, ::1] om = out
    cdef Py_ssize_t i, a, c, j
    cdef double v
    with nogil:
        for i in range(n_rows):
            for a in range(aip[i], aip[i + 1]):
                j = aix[a]
                v = avs[a]
                for c in range(bip[j], bip[j + 1]):
                    om[i, bix[c]] += v * bvs[c]
    return out


cdef inline bint _worse(double s1, int64_t i1, double s2, int64_t i2) noexcept nogil:
    # Ranking order is (score desc, index asc); "worse" sorts toward eviction.
    if s1 != s2:
        return s1 < s2
    return i1 > i2


cdef void _sift_down(double* hs, int64_t* hi, Py_ssize_t size, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t child
    cdef double s = hs[pos]
    cdef int64_t ident = hi[pos]
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and _worse(hs[child + 1], hi[child + 1], hs[child], hi[child]):
            child += 1
        if _worse(hs[child], hi[child], s, ident):
            hs[pos] = hs[child]
            hi[pos] = hi[child]
            pos = child
        else:
            break
    hs[pos] = s
    hi[pos] = ident


cdef void _sift_up(double* hs, int64_t* hi, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t parent
    cdef double s = hs[pos]
    cdef int64_t ident = hi[pos]
    while pos > 0:
        parent = (pos - 1) // 2
        if _worse(s, ident, hs[parent], hi[parent]):
            hs[pos] = hs[parent]
            hi[pos] = hi[parent]
            pos = parent
        else:
            break
    hs[pos] = s
    hi[pos] = ident


def topk_dense(scores, Py_ssize_t k):
    """Per-row top-k of a dense score block.

    Rows of the result are ordered by descending score; equal scores break
    toward the lower column index. Returns (ids, scores) arrays of shape
    (rows, k).
    """
    ss = np.ascontiguousarray(scores, dtype=np.float64)
    cdef const double[:, ::1] sm = ss
    cdef Py_ssize_t n_rows = sm.shape[0]
    cdef Py_ssize_t n_cols = sm.shape[1]
    if k < 1 or k > n_cols:
        raise ValueError(f"k must be in [1, {n_cols}], got {k}")
    ids_out = np.empty((n_rows, k), dtype=np.int64)
    sc_out = np.empty((n_rows, k))
    cdef int64_t[:, ::1] im = ids_out
    cdef double[:, ::1] om = sc_out
    heap_s = np.empty(k)
    heap_i = np.empty(k, dtype=np.int64)
    cdef double[::1] hs_view = heap_s
    cdef int64_t[::1] hi_view = heap_i
    cdef double* hs = &hs_view[0]
    cdef int64_t* hi = &hi_view[0]
    cdef Py_ssize_t i, l, size, p
    cdef double s
    with nogil:
        for i in range(n_rows):
            size = 0
            for l in range(n_cols):
                s = sm[i, l]
                if size < k:
                    hs[size] = s
                    hi[size] = l
                    size += 1
                    _sift_up(hs, hi, size - 1)
                elif _worse(hs[0], hi[0], s, <int64_t> l):
                    hs[0] = s
                    hi[0] = l
                    _sift_down(hs, hi, size, 0)
            # Pop ascending (worst first) into the row back-to-front.
            for p in range(size - 1, -1, -1):
                im[i, p] = hi[0]
                om[i, p] = hs[0]
                hs[0] = hs[size - 1]
                hi[0] = hi[size - 1]
                size -= 1
                if size > 0:
                    _sift_down(hs, hi, size, 0)
    return ids_out, sc_out
