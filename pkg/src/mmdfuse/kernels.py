"""Kernel families, data-dependent kernel banks, and gram-matrix stacks.

The bank construction only looks at the unordered pooled sample (pairwise
distance quantiles), so every derived quantity is invariant under
relabelling the two samples.  That invariance is what lets a permutation
test reuse one gram stack for every permutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backends import active_backend
from .errors import DegenerateDataError, InvalidInputError
from .quantiles import empirical_quantile

GAUSSIAN = "gaussian"
LAPLACE = "laplace"
RATIONAL_QUADRATIC = "rational_quadratic"

#: Canonical family order; banks list their kernels in this order.
FAMILIES = (GAUSSIAN, LAPLACE, RATIONAL_QUADRATIC)

#: Families whose bandwidth scale is read off Euclidean distances; Laplace
#: uses Manhattan distances instead.
_L2_FAMILIES = frozenset({GAUSSIAN, RATIONAL_QUADRATIC})

DEFAULT_FAMILIES = (GAUSSIAN, LAPLACE)
DEFAULT_GRID_SIZE = 10


def as_data_matrix(obj, name: str = "data") -> np.ndarray:
    """Coerce to a 2-D float64 array of observations (rows) and validate."""
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must contain at least one row and column")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class PooledSample:
    """The two samples stacked row-wise: first ``n`` rows, then ``m`` rows."""

    data: np.ndarray
    n: int
    m: int

    @classmethod
    def from_samples(cls, x, y) -> "PooledSample":
        xa = as_data_matrix(x, "x")
        ya = as_data_matrix(y, "y")
        if xa.shape[1] != ya.shape[1]:
            raise InvalidInputError(
                f"dimension mismatch: x has {xa.shape[1]} columns, y has {ya.shape[1]}"
            )
        if xa.shape[0] < 2 or ya.shape[0] < 2:
            raise InvalidInputError("each sample needs at least 2 observations")
        return cls(np.vstack([xa, ya]), xa.shape[0], ya.shape[0])

    @property
    def size(self) -> int:
        return self.n + self.m

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class KernelSpec:
    """One bounded kernel: family, bandwidth, shape (rational quadratic only),
    and the upper bound kappa (1 for every supported family)."""

    family: str
    bandwidth: float
    shape: float = 1.0
    bound: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}"
            )
        if not self.bandwidth > 0:
            raise InvalidInputError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.shape > 0:
            raise InvalidInputError(f"shape must be positive, got {self.shape}")
        if not self.bound > 0:
            raise InvalidInputError(f"bound must be positive, got {self.bound}")


@dataclass(frozen=True)
class KernelBank:
    """A finite weighted collection of kernels (the prior over kernels)."""

    specs: tuple
    weights: np.ndarray

    def __post_init__(self):
        specs = tuple(self.specs)
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "specs", specs)
        object.__setattr__(self, "weights", weights)
        if len(specs) < 1:
            raise InvalidInputError("kernel bank must contain at least one kernel")
        if weights.shape != (len(specs),):
            raise InvalidInputError("one weight per kernel required")
        if (weights < 0).any():
            raise InvalidInputError("kernel weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise InvalidInputError("kernel weights must sum to 1 within 1e-12")

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def bound(self) -> float:
        """Common upper bound kappa across the bank."""
        return max(s.bound for s in self.specs)


@dataclass(frozen=True)
class GramStack:
    """Per-kernel gram matrices over the pooled sample plus each kernel's
    scale normaliser (sum of squared gram entries over distinct pairs,
    divided by n*(n-1))."""

    grams: tuple
    normalizers: np.ndarray
    n: int
    m: int

    def __len__(self) -> int:
        return len(self.grams)

    @property
    def size(self) -> int:
        return self.n + self.m


def pairwise_distances(z, norm_order: int = 2) -> np.ndarray:
    """Full matrix of l1 or l2 distances between the rows of ``z``."""
    arr = as_data_matrix(z, "z")
    if arr.shape[0] < 2:
        raise InvalidInputError("pairwise distances need at least 2 rows")
    backend = active_backend()
    if norm_order == 2:
        return np.sqrt(backend.sq_l2_distances(arr))
    if norm_order == 1:
        return backend.l1_distances(arr)
    raise InvalidInputError(f"norm_order must be 1 or 2, got {norm_order}")


def bandwidth_grid(distances: np.ndarray, grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Uniform bandwidth grid between half the 5% and twice the 95% distance
    quantile.

    Quantiles are taken over the strictly positive entries of the distance
    matrix.  A single-point grid returns the lower endpoint.
    """
    if grid_size < 1:
        raise InvalidInputError(f"grid_size must be >= 1, got {grid_size}")
    d = np.asarray(distances, dtype=np.float64)
    positive = d[d > 0.0]
    if positive.size == 0:
        raise DegenerateDataError(
            "all pairwise distances are zero; no bandwidth scale exists"
        )
    lo = 0.5 * empirical_quantile(positive, 0.05)
    hi = 2.0 * empirical_quantile(positive, 0.95)
    return np.linspace(lo, hi, grid_size)


def build_kernel_bank(
    pooled: PooledSample,
    families=DEFAULT_FAMILIES,
    grid_size: int = DEFAULT_GRID_SIZE,
    rq_shape: float = 1.0,
) -> KernelBank:
    """Uniform bank over the requested families with data-driven bandwidths.

    Bandwidth grids come from pooled-distance quantiles (Euclidean for the
    Gaussian and rational quadratic families, Manhattan for Laplace), so the
    bank depends on the pooled sample only through its unordered rows.
    """
    requested = set(families)
    unknown = requested - set(FAMILIES)
    if unknown:
        raise InvalidInputError(
            f"unknown kernel families {sorted(unknown)}; expected subset of {FAMILIES}"
        )
    if not requested:
        raise InvalidInputError("at least one kernel family is required")

    backend = active_backend()
    grids = {}
    if requested & _L2_FAMILIES:
        l2 = np.sqrt(backend.sq_l2_distances(pooled.data))
        grids[2] = bandwidth_grid(l2, grid_size)
    if LAPLACE in requested:
        grids[1] = bandwidth_grid(backend.l1_distances(pooled.data), grid_size)

    specs = []
    for family in FAMILIES:
        if family not in requested:
            continue
        grid = grids[1] if family == LAPLACE else grids[2]
        for gamma in grid:
            specs.append(KernelSpec(family, float(gamma), shape=rq_shape))
    weights = np.full(len(specs), 1.0 / len(specs))
    return KernelBank(tuple(specs), weights)


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate one kernel at a pair of vectors."""
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.shape != ya.shape:
        raise InvalidInputError(
            f"dimension mismatch: x has {xa.size} entries, y has {ya.size}"
        )
    diff = xa - ya
    if spec.family == GAUSSIAN:
        return float(math.exp(-float(diff @ diff) / (2.0 * spec.bandwidth**2)))
    if spec.family == LAPLACE:
        return float(
            math.exp(-math.sqrt(2.0) * float(np.abs(diff).sum()) / spec.bandwidth)
        )
    return float(
        (1.0 + float(diff @ diff) / (2.0 * spec.bandwidth**2)) ** (-spec.shape)
    )


def gram_matrix(spec: KernelSpec, sq_l2: np.ndarray, l1: np.ndarray | None) -> np.ndarray:
    """Gram matrix of one kernel from precomputed distance matrices."""
    if spec.family == GAUSSIAN:
        return np.exp(-sq_l2 / (2.0 * spec.bandwidth**2))
    if spec.family == LAPLACE:
        if l1 is None:
            raise InvalidInputError("Laplace gram requires the l1 distance matrix")
        return np.exp(-math.sqrt(2.0) * l1 / spec.bandwidth)
    return (1.0 + sq_l2 / (2.0 * spec.bandwidth**2)) ** (-spec.shape)


def gram_stack(
    bank: KernelBank,
    pooled: PooledSample,
    normalizer_denominator: str = "paper",
) -> GramStack:
    """Precompute one gram matrix per kernel plus its scale normaliser.

    The normaliser sums squared kernel values over all ordered distinct
    pooled-index pairs.  The default divides by n*(n-1) where n is the
    first-sample size; ``normalizer_denominator="full"`` divides by
    (n+m)*(n+m-1) instead.
    """
    if normalizer_denominator not in ("paper", "full"):
        raise InvalidInputError(
            "normalizer_denominator must be 'paper' or 'full', "
            f"got {normalizer_denominator!r}"
        )
    backend = active_backend()
    sq_l2 = backend.sq_l2_distances(pooled.data)
    needs_l1 = any(s.family == LAPLACE for s in bank.specs)
    l1 = backend.l1_distances(pooled.data) if needs_l1 else None

    size = pooled.size
    if normalizer_denominator == "paper":
        denom = pooled.n * (pooled.n - 1.0)
    else:
        denom = size * (size - 1.0)

    grams = []
    normalizers = np.empty(len(bank))
    for k, spec in enumerate(bank.specs):
        g = gram_matrix(spec, sq_l2, l1)
        grams.append(g)
        diag = np.diagonal(g)
        off_diag_sq = float(np.einsum("ij,ij->", g, g)) - float(diag @ diag)
        normalizers[k] = off_diag_sq / denom
    return GramStack(tuple(grams), normalizers, pooled.n, pooled.m)


@dataclass(frozen=True)
class StandardizeTransform:
    """Affine per-coordinate map fitted on the pooled sample."""

    offset: np.ndarray
    scale: np.ndarray

    def apply(self, data: np.ndarray) -> np.ndarray:
        return (data - self.offset) / self.scale


def pooled_standardize(pooled: PooledSample):
    """Centre and scale each coordinate by its pooled mean and standard
    deviation.  Constant coordinates keep scale 1 (offset still removed).
    Returns the fitted transform and the transformed pooled sample.
    """
    mean = pooled.data.mean(axis=0)
    std = pooled.data.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    transform = StandardizeTransform(mean, scale)
    return transform, PooledSample(transform.apply(pooled.data), pooled.n, pooled.m)
