"""Quadratic-time unbiased MMD^2 from a precomputed gram matrix.

``mmd_u`` evaluates the statistic for an arbitrary relabelling of the
pooled sample by reading gram entries at permuted indices; the gram matrix
itself is never recomputed.  The estimator is unbiased and may legitimately
be negative; values are never clamped.
"""

from __future__ import annotations

import numpy as np

from .backends import active_backend
from .errors import InvalidInputError
from .kernels import GramStack, KernelSpec, eval_kernel


def _as_perm(perm, size: int) -> np.ndarray:
    p = np.asarray(perm, dtype=np.int64).ravel()
    if p.shape != (size,) or not np.array_equal(np.sort(p), np.arange(size)):
        raise InvalidInputError(f"perm must be a bijection on range({size})")
    return p


def identity_perm(size: int) -> np.ndarray:
    return np.arange(size, dtype=np.int64)


def mmd_u(gram: np.ndarray, n: int, m: int, perm) -> float:
    """Unbiased MMD^2 of the relabelled pooled sample.

    ``perm`` maps position -> pooled index; positions 0..n-1 form the first
    sample.  With the identity permutation this is the plain two-sample
    estimator.  For bounded kernels |value| <= 4 * kappa.
    """
    gram = np.asarray(gram, dtype=np.float64)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise InvalidInputError("gram must be a square matrix")
    if n < 2 or m < 2:
        raise InvalidInputError("both samples need at least 2 observations")
    if gram.shape[0] != n + m:
        raise InvalidInputError("gram size must equal n + m")
    p = _as_perm(perm, n + m)
    xidx = np.ascontiguousarray(p[:n].reshape(1, n))
    return float(active_backend().batch_mmd(np.ascontiguousarray(gram), xidx, n, m)[0])


def batch_mmd_u(gram: np.ndarray, n: int, m: int, perms: np.ndarray) -> np.ndarray:
    """``mmd_u`` for every permutation in ``perms`` (one row each)."""
    gram = np.ascontiguousarray(np.asarray(gram, dtype=np.float64))
    xidx = np.ascontiguousarray(np.asarray(perms, dtype=np.int64)[:, :n])
    return active_backend().batch_mmd(gram, xidx, n, m)


def h_kernel(spec: KernelSpec, x, x2, y, y2) -> float:
    """Two-sample core function h(x, x'; y, y') = k(x,x') + k(y,y')
    - k(x,y') - k(x',y).  Bounded by 2 * kappa in absolute value."""
    return (
        eval_kernel(spec, x, x2)
        + eval_kernel(spec, y, y2)
        - eval_kernel(spec, x, y2)
        - eval_kernel(spec, x2, y)
    )


def h_kernel_sym(spec: KernelSpec, x, x2, y, y2) -> float:
    """Symmetrised core, invariant under swapping x with x'."""
    return 0.5 * (h_kernel(spec, x, x2, y, y2) + h_kernel(spec, x2, x, y, y2))


def mean_gram(stack: GramStack, weights) -> np.ndarray:
    """Entrywise mixture of the stacked grams; the gram of the mean kernel.

    MMD^2 is linear in the kernel, so ``mmd_u`` of the result equals the
    weighted sum of the per-kernel ``mmd_u`` values.
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.shape != (len(stack),):
        raise InvalidInputError(
            f"expected {len(stack)} weights, got {w.shape[0]}"
        )
    out = np.zeros_like(stack.grams[0])
    for wk, g in zip(w, stack.grams):
        out += wk * g
    return out
