"""Fused statistics: a weighted soft maximum of per-kernel MMD estimates.

Two variants exist.  The normalised variant ("N") divides each kernel's
MMD^2 by the square root of that kernel's gram-scale normaliser so that
kernels with very different bandwidths contribute on a common scale; the
un-normalised variant ("1") fuses the raw MMD^2 values.  Both compute

    value = (1/lam) * log( sum_k w_k * exp(lam * t_k) )

through a shifted log-sum-exp, which for uniform weights is sandwiched
between ``max_k t_k - log(r)/lam`` and ``max_k t_k``.

The un-normalised variant has an equivalent dual form: the best
KL-regularised reweighting of the kernel bank, attained by the Gibbs
posterior (``gibbs_dual_fuse1``).  For a rational-quadratic family with a
Gamma prior over inverse squared bandwidths the dual collapses to a
one-dimensional objective in the bandwidth rescaling R (``rq_fuse1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateKernelError, InvalidInputError
from .kernels import RATIONAL_QUADRATIC, GramStack, KernelBank, KernelSpec, PooledSample, gram_matrix
from .backends import active_backend
from .mmd import batch_mmd_u, identity_perm, mean_gram, mmd_u

VARIANT_NORMALIZED = "N"
VARIANT_UNNORMALIZED = "1"
_VARIANTS = (VARIANT_NORMALIZED, VARIANT_UNNORMALIZED)

DEFAULT_R_GRID = np.logspace(-2.0, 2.0, 30)


@dataclass(frozen=True)
class FuseConfig:
    """Which statistic to fuse, at what temperature, over which bank."""

    bank: KernelBank
    variant: str = VARIANT_NORMALIZED
    lam: float | str = "auto"

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise InvalidInputError(
                f"variant must be one of {_VARIANTS}, got {self.variant!r}"
            )
        if self.lam != "auto" and not (
            isinstance(self.lam, (int, float)) and self.lam > 0
        ):
            raise InvalidInputError(
                f"lam must be a positive number or 'auto', got {self.lam!r}"
            )


@dataclass(frozen=True)
class FuseValue:
    """Fused statistic plus the per-kernel exponents lam * t_k."""

    value: float
    per_kernel_terms: np.ndarray


def resolve_lambda(lam: float | str, n: int) -> float:
    """Numeric temperature: 'auto' resolves to the first-sample size."""
    if lam == "auto":
        return float(n)
    lam = float(lam)
    if not lam > 0:
        raise InvalidInputError(f"lam must be positive, got {lam}")
    return lam


def _check_sandwich(values: np.ndarray, t: np.ndarray, weights: np.ndarray, lam: float) -> None:
    # Soft-max sandwich for uniform weights; cheap internal self-check.
    # values: (B,); t: (r, B).
    if weights.size < 1 or abs(weights.max() - weights.min()) > 1e-15:
        return
    tops = t.max(axis=0)
    slack = 1e-9 * (1.0 + np.abs(tops) + 1.0 / lam)
    assert (values <= tops + slack).all()
    assert (values >= tops - math.log(t.shape[0]) / lam - slack).all()


def _logsumexp_rows(scores: np.ndarray, log_w: np.ndarray) -> np.ndarray:
    # scores: (r, B); log_w: (r,) with -inf for zero weights.
    shifted = scores + log_w[:, None]
    top = shifted.max(axis=0)
    return top + np.log(np.exp(shifted - top[None, :]).sum(axis=0))


def fuse_values_from_mmds(
    mmd_matrix: np.ndarray,
    normalizers: np.ndarray,
    bank: KernelBank,
    variant: str,
    lam: float,
) -> np.ndarray:
    """Fused statistic for each column of a (kernels x permutations) MMD
    matrix.  The normalisers come precomputed from the gram stack; they are
    permutation-invariant so they are never recomputed per permutation."""
    if variant not in _VARIANTS:
        raise InvalidInputError(f"variant must be one of {_VARIANTS}, got {variant!r}")
    t = np.asarray(mmd_matrix, dtype=np.float64)
    if t.ndim == 1:
        t = t[:, None]
    if variant == VARIANT_NORMALIZED:
        norm = np.asarray(normalizers, dtype=np.float64)
        bad = np.flatnonzero(norm <= 0.0)
        if bad.size:
            k = int(bad[0])
            raise DegenerateKernelError(
                f"kernel {k} ({bank.specs[k].family}, bandwidth="
                f"{bank.specs[k].bandwidth:g}) has a non-positive normaliser; "
                "the normalised statistic is undefined for it"
            )
        t = t / np.sqrt(norm)[:, None]
    if len(bank) == 1:
        return t[0].copy()
    with np.errstate(divide="ignore"):
        log_w = np.log(bank.weights)
    values = _logsumexp_rows(lam * t, log_w) / lam
    _check_sandwich(values, t, bank.weights, lam)
    return values


def fuse_statistic(stack: GramStack, perm, config: FuseConfig) -> FuseValue:
    """Fused statistic of the relabelled pooled sample under ``config``."""
    if len(config.bank) != len(stack):
        raise InvalidInputError("bank and gram stack disagree on kernel count")
    lam = resolve_lambda(config.lam, stack.n)
    mmds = np.array([mmd_u(g, stack.n, stack.m, perm) for g in stack.grams])
    values = fuse_values_from_mmds(
        mmds[:, None], stack.normalizers, config.bank, config.variant, lam
    )
    if config.variant == VARIANT_NORMALIZED:
        terms = lam * mmds / np.sqrt(stack.normalizers)
    else:
        terms = lam * mmds
    return FuseValue(float(values[0]), terms)


def kl_divergence(rho, pi) -> float:
    """KL(rho || pi) for two finite distributions on the same support.

    Terms with rho_k = 0 contribute nothing; rho_k > 0 where pi_k = 0 gives
    +inf.
    """
    r = np.asarray(rho, dtype=np.float64).ravel()
    p = np.asarray(pi, dtype=np.float64).ravel()
    if r.shape != p.shape:
        raise InvalidInputError(
            f"length mismatch: rho has {r.size} entries, pi has {p.size}"
        )
    for v, label in ((r, "rho"), (p, "pi")):
        if (v < 0).any() or abs(float(v.sum()) - 1.0) > 1e-12:
            raise InvalidInputError(f"{label} must lie on the probability simplex")
    support = r > 0.0
    if (p[support] == 0.0).any():
        return math.inf
    return float(np.sum(r[support] * np.log(r[support] / p[support])))


def gibbs_dual_fuse1(stack: GramStack, perm, lam: float, bank: KernelBank):
    """Dual of the un-normalised fused statistic.

    Returns the value of the KL-regularised supremum together with the
    maximising kernel weights (the Gibbs posterior, proportional to
    ``w_k * exp(lam * mmd_k)``).  Equals ``fuse_statistic`` with variant "1".
    """
    if len(bank) != len(stack):
        raise InvalidInputError("bank and gram stack disagree on kernel count")
    lam = resolve_lambda(lam, stack.n)
    mmds = np.array([mmd_u(g, stack.n, stack.m, perm) for g in stack.grams])
    with np.errstate(divide="ignore"):
        logits = lam * mmds + np.log(bank.weights)
    top = logits.max()
    rho = np.exp(logits - top)
    rho /= rho.sum()
    value = mmd_u(mean_gram(stack, rho), stack.n, stack.m, perm)
    value -= kl_divergence(rho, bank.weights) / lam
    return float(value), rho


def rq_fuse1(
    pooled: PooledSample,
    rq_shape: float,
    eta0: float,
    lam: float,
    r_grid=None,
) -> float:
    """Closed-form un-normalised fused statistic over a continuum of
    rational-quadratic kernels.

    A Gamma prior over the inverse squared bandwidth turns the dual
    supremum into a one-dimensional objective in the rescaling R > 0:
    MMD^2 under bandwidth sqrt(R) * eta0, penalised by
    shape * (log R + 1/R - 1) / lam.  The grid maximum is returned; at
    R = 1 the penalty vanishes and the objective is the plain
    rational-quadratic MMD^2 at bandwidth eta0.
    """
    if r_grid is None:
        r_grid = DEFAULT_R_GRID
    grid = np.asarray(r_grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise InvalidInputError("r_grid must be nonempty")
    if (grid <= 0).any():
        raise InvalidInputError("r_grid entries must be positive")
    if not eta0 > 0:
        raise InvalidInputError(f"eta0 must be positive, got {eta0}")
    lam = resolve_lambda(lam, pooled.n)

    sq_l2 = active_backend().sq_l2_distances(pooled.data)
    ident = identity_perm(pooled.size)[None, :]
    best = -math.inf
    for r_val in grid:
        spec = KernelSpec(RATIONAL_QUADRATIC, math.sqrt(r_val) * eta0, shape=rq_shape)
        gram = gram_matrix(spec, sq_l2, None)
        value = float(batch_mmd_u(gram, pooled.n, pooled.m, ident)[0])
        value -= rq_shape * (math.log(r_val) + 1.0 / r_val - 1.0) / lam
        best = max(best, value)
    return best
