# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: pairwise distance matrices and batched permutation
statistics read off a precomputed gram matrix.

All accumulations run in a fixed serial order so results are reproducible
bit-for-bit regardless of how callers schedule work.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

NAME = "cython"


def sq_l2_distances(const double[:, ::1] x):
    """Squared Euclidean distances between all row pairs of ``x``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                acc += diff * diff
            o[i, j] = acc
            o[j, i] = acc
    return out


def l1_distances(const double[:, ::1] x):
    """Manhattan distances between all row pairs of ``x``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                acc += fabs(x[i, k] - x[j, k])
            o[i, j] = acc
            o[j, i] = acc
    return out


def batch_mmd(const double[:, ::1] gram, const cnp.int64_t[:, ::1] xidx,
              Py_ssize_t n, Py_ssize_t m):
    """Unbiased quadratic MMD^2 for every relabelling in ``xidx``.

    ``xidx`` holds one row per relabelling: the ``n`` pooled-sample indices
    assigned to the first sample.  The remaining ``m`` indices implicitly
    form the second sample.  The gram matrix is only ever read, never
    rebuilt.  Returns a float64 vector of length ``xidx.shape[0]``.
    """
    cdef Py_ssize_t total_n = gram.shape[0]
    cdef Py_ssize_t nperm = xidx.shape[0]
    if xidx.shape[1] != n or n + m != total_n:
        raise ValueError("index matrix shape is inconsistent with n, m")

    cdef cnp.ndarray[cnp.float64_t, ndim=1] rowsum = np.empty(total_n, dtype=np.float64)
    cdef double[::1] rs = rowsum
    cdef Py_ssize_t i, j, b, a, c
    cdef double acc, total, trace, q, d_s, s
    cdef double sum_xx, sum_xy, sum_yy
    cdef cnp.int64_t ia

    total = 0.0
    trace = 0.0
    for i in range(total_n):
        acc = 0.0
        for j in range(total_n):
            acc += gram[i, j]
        rs[i] = acc
        total += acc
        trace += gram[i, i]

    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nperm, dtype=np.float64)
    cdef double[::1] o = out
    cdef double cxx = 1.0 / (n * (n - 1.0))
    cdef double cyy = 1.0 / (m * (m - 1.0))
    cdef double cxy = 2.0 / (n * <double> m)

    for b in range(nperm):
        q = 0.0
        d_s = 0.0
        s = 0.0
        for a in range(n):
            ia = xidx[b, a]
            s += rs[ia]
            d_s += gram[ia, ia]
            acc = 0.0
            for c in range(n):
                acc += gram[ia, xidx[b, c]]
            q += acc
        sum_xx = q - d_s
        sum_xy = s - q
        sum_yy = (total - 2.0 * s + q) - (trace - d_s)
        o[b] = cxx * sum_xx + cyy * sum_yy - cxy * sum_xy
    return out
