"""Permutation sampling and the complete fused permutation test.

The test compares the observed statistic against the empirical
(1 - alpha)-quantile of the statistic over B sampled relabellings plus the
identity; rejection requires strictly exceeding that quantile.  Including
the identity in the quantile set is what makes the level guarantee exact
for any B >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .fuse import (
    VARIANT_NORMALIZED,
    FuseConfig,
    fuse_values_from_mmds,
    resolve_lambda,
)
from .kernels import (
    DEFAULT_FAMILIES,
    DEFAULT_GRID_SIZE,
    KernelBank,
    PooledSample,
    build_kernel_bank,
    gram_stack,
    pooled_standardize,
)
from .mmd import batch_mmd_u
from .quantiles import empirical_quantile

__all__ = [
    "PermutationSet",
    "TestConfig",
    "TestResult",
    "empirical_quantile",
    "min_permutations_for_power",
    "p_proxy",
    "run_test",
    "sample_permutations",
]

DEFAULT_ALPHA = 0.05
DEFAULT_B = 2000


@dataclass(frozen=True)
class PermutationSet:
    """B sampled permutations of the pooled indices plus the identity last.

    Reconstructible bit-for-bit from (seed, b, size).
    """

    perms: np.ndarray
    seed: int
    b: int

    @property
    def size(self) -> int:
        return self.perms.shape[1]


def sample_permutations(size: int, b: int, seed: int) -> PermutationSet:
    """Draw ``b`` i.i.d. uniform permutations of ``range(size)`` and append
    the identity."""
    if size < 2:
        raise InvalidInputError(f"size must be >= 2, got {size}")
    if b < 1:
        raise InvalidInputError(f"b must be >= 1, got {b}")
    rng = np.random.default_rng(seed)
    perms = np.empty((b + 1, size), dtype=np.int64)
    for i in range(b):
        perms[i] = rng.permutation(size)
    perms[b] = np.arange(size, dtype=np.int64)
    perms.setflags(write=False)
    return PermutationSet(perms, seed, b)


def p_proxy(permuted_stats, observed: float) -> float:
    """Permutation p-value: (1 + #{sampled stats >= observed}) / (B + 1).

    ``permuted_stats`` is the full vector with the identity entry last;
    ``observed`` must equal that identity entry.  Ties count against
    rejection, matching the strict-inequality rejection rule: the p-value
    is <= alpha exactly when the test rejects.
    """
    stats = np.asarray(permuted_stats, dtype=np.float64).ravel()
    if stats.size < 2:
        raise InvalidInputError("permuted_stats must contain the identity plus >= 1 draw")
    if stats[-1] != observed:
        raise InvalidInputError("observed must be the identity entry of permuted_stats")
    count = int((stats[:-1] >= observed).sum())
    return (1 + count) / stats.size


def min_permutations_for_power(alpha: float, delta: float) -> int:
    """Smallest B for which sampled permutations provably cost at most a
    constant-factor adjustment of alpha in the power analysis."""
    return math.ceil(8.0 * alpha**-2 * math.log(2.0 / delta))


@dataclass(frozen=True)
class TestConfig:
    """Everything ``run_test`` needs besides the data."""

    __test__ = False  # not a pytest class, despite the name

    alpha: float = DEFAULT_ALPHA
    b: int = DEFAULT_B
    seed: int = 0
    variant: str = VARIANT_NORMALIZED
    lam: float | str = "auto"
    families: tuple = DEFAULT_FAMILIES
    grid_size: int = DEFAULT_GRID_SIZE
    standardize: bool = False
    normalizer_denominator: str = "paper"
    guaranteed_power: bool = False
    guaranteed_power_delta: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.b < 1:
            raise InvalidConfigError(f"b must be >= 1, got {self.b}")
        if not 0.0 < self.guaranteed_power_delta < 1.0:
            raise InvalidConfigError(
                "guaranteed_power_delta must be in (0, 1), "
                f"got {self.guaranteed_power_delta}"
            )

    def effective_b(self) -> int:
        if not self.guaranteed_power:
            return self.b
        return max(self.b, min_permutations_for_power(self.alpha, self.guaranteed_power_delta))


@dataclass(frozen=True)
class TestResult:
    """Outcome of one permutation test.

    ``permuted_stats`` holds the statistic for the B sampled permutations
    followed by the identity (the observed statistic).  ``reject`` is
    equivalent to ``statistic > threshold`` and to ``p_proxy <= alpha``.
    """

    __test__ = False  # not a pytest class, despite the name

    statistic: float
    threshold: float
    reject: bool
    p_proxy: float
    permuted_stats: np.ndarray
    config: dict = field(repr=False)


def _bank_permutation_test(
    pooled: PooledSample,
    bank: KernelBank,
    variant: str,
    lam: float | str,
    alpha: float,
    b: int,
    seed: int,
    normalizer_denominator: str = "paper",
    config_snapshot: dict | None = None,
) -> TestResult:
    """Shared engine: gram stack once, statistics for B+1 relabellings."""
    lam_value = resolve_lambda(lam, pooled.n)
    stack = gram_stack(bank, pooled, normalizer_denominator)
    perm_set = sample_permutations(pooled.size, b, seed)
    mmd_matrix = np.vstack(
        [batch_mmd_u(g, pooled.n, pooled.m, perm_set.perms) for g in stack.grams]
    )
    values = fuse_values_from_mmds(
        mmd_matrix, stack.normalizers, bank, variant, lam_value
    )
    observed = float(values[-1])
    threshold = empirical_quantile(values, 1.0 - alpha)
    reject = observed > threshold
    snapshot = {
        "alpha": alpha,
        "b": b,
        "seed": seed,
        "variant": variant,
        "lambda": lam_value,
        "normalizer_denominator": normalizer_denominator,
        "n": pooled.n,
        "m": pooled.m,
        "dim": pooled.dim,
        "kernels": len(bank),
    }
    if config_snapshot:
        snapshot.update(config_snapshot)
    return TestResult(
        statistic=observed,
        threshold=float(threshold),
        reject=bool(reject),
        p_proxy=p_proxy(values, observed),
        permuted_stats=values,
        config=snapshot,
    )


def run_test(x, y, config: TestConfig | None = None) -> TestResult:
    """Fused-statistic permutation two-sample test.

    Pipeline: pool the samples, optionally standardise on pooled moments,
    build the data-dependent kernel bank, precompute the gram stack, then
    evaluate the fused statistic on the identity and on each sampled
    permutation by index lookup.
    """
    if config is None:
        config = TestConfig()
    pooled = PooledSample.from_samples(x, y)
    if config.standardize:
        _, pooled = pooled_standardize(pooled)
    bank = build_kernel_bank(pooled, config.families, config.grid_size)
    # Validates variant/lam eagerly, before any quadratic work.
    FuseConfig(bank, config.variant, config.lam)
    return _bank_permutation_test(
        pooled,
        bank,
        variant=config.variant,
        lam=config.lam,
        alpha=config.alpha,
        b=config.effective_b(),
        seed=config.seed,
        normalizer_denominator=config.normalizer_denominator,
        config_snapshot={
            "families": list(config.families),
            "grid_size": config.grid_size,
            "standardize": config.standardize,
            "requested_b": config.b,
        },
    )
