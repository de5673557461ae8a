"""NumPy fallback for the compiled core.

Implements the same three operations with the same algebra, built on
vectorised primitives.  The batched statistic uses one matrix product per
index chunk; chunk size is a fixed constant so results do not depend on
caller-side threading.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

NAME = "numpy"

_CHUNK = 128


def sq_l2_distances(x: np.ndarray) -> np.ndarray:
    return cdist(x, x, "sqeuclidean")


def l1_distances(x: np.ndarray) -> np.ndarray:
    return cdist(x, x, "cityblock")


def batch_mmd(gram: np.ndarray, xidx: np.ndarray, n: int, m: int) -> np.ndarray:
    """Unbiased quadratic MMD^2 for every relabelling in ``xidx``.

    ``xidx`` holds one row per relabelling: the ``n`` pooled-sample indices
    assigned to the first sample.  Same contract as the compiled version.
    """
    total_n = gram.shape[0]
    if xidx.shape[1] != n or n + m != total_n:
        raise ValueError("index matrix shape is inconsistent with n, m")
    gram = np.ascontiguousarray(gram, dtype=np.float64)
    diag = np.diagonal(gram)
    rowsum = gram.sum(axis=1)
    total = float(rowsum.sum())
    trace = float(diag.sum())

    nperm = xidx.shape[0]
    out = np.empty(nperm, dtype=np.float64)
    cxx = 1.0 / (n * (n - 1.0))
    cyy = 1.0 / (m * (m - 1.0))
    cxy = 2.0 / (n * float(m))
    for start in range(0, nperm, _CHUNK):
        idx = xidx[start : start + _CHUNK]
        rows = np.zeros((idx.shape[0], total_n), dtype=np.float64)
        np.put_along_axis(rows, idx, 1.0, axis=1)
        prod = rows @ gram
        q = np.einsum("ij,ij->i", prod, rows)
        s = rowsum[idx].sum(axis=1)
        d_s = diag[idx].sum(axis=1)
        sum_xx = q - d_s
        sum_xy = s - q
        sum_yy = (total - 2.0 * s + q) - (trace - d_s)
        out[start : start + _CHUNK] = cxx * sum_xx + cyy * sum_yy - cxy * sum_xy
    return out
