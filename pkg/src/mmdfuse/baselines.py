"""Reference single-kernel tests: median-heuristic and data-splitting.

Both run the same permutation machinery as the fused test but with a single
Gaussian kernel.  The median test picks its bandwidth from the pooled
distances (permutation-invariant, so no data is sacrificed); the split test
spends half the data selecting a bandwidth that maximises an estimated
signal-to-noise ratio, then tests on the held-out half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backends import active_backend
from .errors import DegenerateDataError, InvalidInputError
from .fuse import VARIANT_UNNORMALIZED
from .kernels import (
    GAUSSIAN,
    KernelBank,
    KernelSpec,
    PooledSample,
    as_data_matrix,
    bandwidth_grid,
)
from .mmd import batch_mmd_u, identity_perm
from .permutation import DEFAULT_ALPHA, DEFAULT_B, TestResult, _bank_permutation_test
from .quantiles import lower_median


@dataclass(frozen=True)
class SplitConfig:
    split_fraction: float = 0.5
    selection_grid_size: int = 100
    variance_regularizer: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise InvalidInputError(
                f"split_fraction must be in (0, 1), got {self.split_fraction}"
            )
        if self.selection_grid_size < 1:
            raise InvalidInputError(
                f"selection_grid_size must be >= 1, got {self.selection_grid_size}"
            )
        if not self.variance_regularizer > 0:
            raise InvalidInputError(
                f"variance_regularizer must be positive, got {self.variance_regularizer}"
            )


def _single_kernel_test(pooled, spec, alpha, b, seed, snapshot) -> TestResult:
    bank = KernelBank((spec,), np.array([1.0]))
    # One kernel: the un-normalised fused statistic is exactly that
    # kernel's MMD^2, so this is a plain single-kernel permutation test.
    return _bank_permutation_test(
        pooled,
        bank,
        variant=VARIANT_UNNORMALIZED,
        lam=1.0,
        alpha=alpha,
        b=b,
        seed=seed,
        config_snapshot=snapshot,
    )


def median_heuristic_test(
    x, y, alpha: float = DEFAULT_ALPHA, b: int = DEFAULT_B, seed: int = 0
) -> TestResult:
    """Gaussian-kernel permutation test with the median-distance bandwidth.

    The bandwidth is the lower median of the positive pooled Euclidean
    distances; it depends on the unordered pooled sample only, so the exact
    level guarantee of the permutation test is preserved.
    """
    pooled = PooledSample.from_samples(x, y)
    dists = np.sqrt(active_backend().sq_l2_distances(pooled.data))
    positive = dists[dists > 0.0]
    if positive.size == 0:
        raise DegenerateDataError(
            "all pairwise distances are zero; the median bandwidth is undefined"
        )
    bandwidth = lower_median(positive)
    spec = KernelSpec(GAUSSIAN, bandwidth)
    return _single_kernel_test(
        pooled, spec, alpha, b, seed, {"test": "mmd-median", "bandwidth": bandwidth}
    )


def variance_estimate_h1(
    gram: np.ndarray, n: int, m: int, reg: float, seed: int = 0
) -> float:
    """Estimated variance of MMD^2 under the alternative, plus ``reg``.

    Uses the paired-sample form over H_ij = h(x_i, x_j; y_i, y_j):

        sigma^2 = (4/n) * [ mean_i(row_mean_i^2) - grand_mean^2 ] + reg

    If n != m the larger sample is subsampled to the smaller with the given
    seed so the pairing is defined.  The result is always >= reg.
    """
    if n < 2 or m < 2:
        raise InvalidInputError("variance estimate needs at least 2 points per sample")
    gram = np.asarray(gram, dtype=np.float64)
    if gram.shape != (n + m, n + m):
        raise InvalidInputError("gram size must equal n + m")
    size = min(n, m)
    xi = np.arange(n)
    yi = np.arange(n, n + m)
    if n != m:
        rng = np.random.default_rng(seed)
        if n > m:
            xi = np.sort(rng.choice(n, size=size, replace=False))
        else:
            yi = n + np.sort(rng.choice(m, size=size, replace=False))
    cross = gram[np.ix_(xi, yi)]
    h = gram[np.ix_(xi, xi)] + gram[np.ix_(yi, yi)] - cross - cross.T
    row_means = h.mean(axis=1)
    grand = h.mean()
    sigma2 = 4.0 / size * (float(np.mean(row_means**2)) - float(grand) ** 2) + reg
    return max(sigma2, reg)


def split_test(
    x,
    y,
    alpha: float = DEFAULT_ALPHA,
    b: int = DEFAULT_B,
    seed: int = 0,
    cfg: SplitConfig | None = None,
) -> TestResult:
    """Data-splitting Gaussian test: select a bandwidth on one half,
    run the permutation test on the held-out half.

    Each sample is shuffled with a seeded generator, the first
    floor(fraction * size) points form the selection half.  Candidate
    bandwidths from the usual quantile grid (100 points by default) are
    scored by MMD^2 / sqrt(estimated variance under the alternative); the
    winner is tested on the held-out half.  Selection never reads held-out
    rows.
    """
    if cfg is None:
        cfg = SplitConfig()
    xa = as_data_matrix(x, "x")
    ya = as_data_matrix(y, "y")
    if xa.shape[1] != ya.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: x has {xa.shape[1]} columns, y has {ya.shape[1]}"
        )
    n, m = xa.shape[0], ya.shape[0]
    n_sel = math.floor(cfg.split_fraction * n)
    m_sel = math.floor(cfg.split_fraction * m)
    if min(n_sel, m_sel, n - n_sel, m - m_sel) < 2:
        raise InvalidInputError(
            "samples too small to split: each half needs >= 2 points per sample "
            f"(n={n}, m={m}, fraction={cfg.split_fraction})"
        )

    seeds = np.random.SeedSequence(seed).generate_state(4, dtype=np.uint64)
    x_order = np.random.default_rng(int(seeds[0])).permutation(n)
    y_order = np.random.default_rng(int(seeds[1])).permutation(m)
    x_sel, x_test = xa[x_order[:n_sel]], xa[x_order[n_sel:]]
    y_sel, y_test = ya[y_order[:m_sel]], ya[y_order[m_sel:]]

    sel_pool = PooledSample.from_samples(x_sel, y_sel)
    sq_l2 = active_backend().sq_l2_distances(sel_pool.data)
    grid = bandwidth_grid(np.sqrt(sq_l2), cfg.selection_grid_size)
    ident = identity_perm(sel_pool.size)[None, :]

    best_bw = None
    best_score = -math.inf
    for gamma in grid:
        gram = np.exp(-sq_l2 / (2.0 * float(gamma) ** 2))
        stat = float(batch_mmd_u(gram, n_sel, m_sel, ident)[0])
        var = variance_estimate_h1(
            gram, n_sel, m_sel, cfg.variance_regularizer, seed=int(seeds[2])
        )
        score = stat / math.sqrt(var)
        if score > best_score:
            best_score = score
            best_bw = float(gamma)

    held_out = PooledSample.from_samples(x_test, y_test)
    spec = KernelSpec(GAUSSIAN, best_bw)
    return _single_kernel_test(
        held_out,
        spec,
        alpha,
        b,
        int(seeds[3]),
        {
            "test": "mmd-split",
            "bandwidth": best_bw,
            "selection_score": best_score,
            "split_fraction": cfg.split_fraction,
            "selection_n": n_sel,
            "selection_m": m_sel,
        },
    )
