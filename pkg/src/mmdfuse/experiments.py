"""Monte-Carlo harness: level calibration, power sweeps, null-concentration
checks, and runtime scaling.

Repetitions are independent with seeds derived from (master_seed, grid
point, repetition), so results are reproducible regardless of thread count
and raw rejection counts are always reported alongside rates.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import median_heuristic_test, split_test
from .errors import InvalidConfigError, InvalidInputError
from .fuse import VARIANT_NORMALIZED, VARIANT_UNNORMALIZED, fuse_values_from_mmds
from .kernels import DEFAULT_FAMILIES, DEFAULT_GRID_SIZE, GAUSSIAN, PooledSample, build_kernel_bank, gram_stack
from .mmd import batch_mmd_u, identity_perm
from .permutation import TestConfig, TestResult, run_test
from .synthetic import (
    GaussMixtureSetting,
    PerturbedUniformSetting,
    sample_gauss_mixture,
    sample_perturbed_uniform,
    sample_shifted_gaussian,
)

#: 97.5% standard-normal quantile, for 95% Wilson intervals.
_Z95 = 1.959963984540054

GAUSS_MIXTURE = "gauss_mixture"
PERTURBED_UNIFORM = "perturbed_uniform"
SHIFTED_GAUSSIAN = "shifted_gaussian"
STANDARD_NORMAL = "standard_normal"
SETTINGS = (GAUSS_MIXTURE, PERTURBED_UNIFORM, SHIFTED_GAUSSIAN, STANDARD_NORMAL)

#: Effect value at which each setting reduces to the null p = q.
NULL_EFFECTS = {
    GAUSS_MIXTURE: 1.0,
    PERTURBED_UNIFORM: 0.0,
    SHIFTED_GAUSSIAN: 0.0,
    STANDARD_NORMAL: 0.0,
}

TEST_IDS = ("fuse-n", "fuse-1", "mmd-median", "mmd-split")


def run_named_test(test_id: str, x, y, alpha: float, b: int, seed: int) -> TestResult:
    """Dispatch one of the four shipped tests by its identifier."""
    if test_id == "fuse-n":
        return run_test(x, y, TestConfig(alpha=alpha, b=b, seed=seed, variant=VARIANT_NORMALIZED))
    if test_id == "fuse-1":
        return run_test(x, y, TestConfig(alpha=alpha, b=b, seed=seed, variant=VARIANT_UNNORMALIZED))
    if test_id == "mmd-median":
        return median_heuristic_test(x, y, alpha=alpha, b=b, seed=seed)
    if test_id == "mmd-split":
        return split_test(x, y, alpha=alpha, b=b, seed=seed)
    raise InvalidConfigError(f"unknown test id {test_id!r}; expected one of {TEST_IDS}")


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    # The score interval always contains the point estimate; enforce that
    # through rounding.
    lo = min(max(0.0, centre - half), p)
    hi = max(min(1.0, centre + half), p)
    return lo, hi


@dataclass(frozen=True)
class SweepSpec:
    """One Monte-Carlo sweep: a generator setting, a grid of effect values
    or sample sizes, and the tests to run at each grid point."""

    setting: str
    grid: tuple
    reps: int
    tests: tuple = TEST_IDS
    axis: str = "effect"
    alpha: float = 0.05
    b: int = 500
    master_seed: int = 0
    n: int = 100
    m: int | None = None
    dim: int = 1
    effect: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise InvalidConfigError(
                f"unknown setting {self.setting!r}; expected one of {SETTINGS}"
            )
        if self.axis not in ("effect", "sample_size"):
            raise InvalidConfigError(
                f"axis must be 'effect' or 'sample_size', got {self.axis!r}"
            )
        if len(self.grid) == 0:
            raise InvalidConfigError("grid must be nonempty")
        if self.reps < 1:
            raise InvalidConfigError(f"reps must be >= 1, got {self.reps}")
        if self.axis == "sample_size" and self.effect is None:
            raise InvalidConfigError("sample_size sweeps need a fixed 'effect' value")
        if self.master_seed < 0:
            raise InvalidConfigError(f"master_seed must be >= 0, got {self.master_seed}")
        for test_id in self.tests:
            if test_id not in TEST_IDS:
                raise InvalidConfigError(
                    f"unknown test id {test_id!r}; expected one of {TEST_IDS}"
                )
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class PowerCell:
    test: str
    grid_value: float
    reps: int
    rejections: int
    rate: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class PowerCurve:
    spec: SweepSpec
    cells: tuple

    def rate(self, test: str, grid_value) -> float:
        for cell in self.cells:
            if cell.test == test and cell.grid_value == grid_value:
                return cell.rate
        raise KeyError((test, grid_value))


def _derived_seeds(master_seed: int, point: int, rep: int) -> tuple[int, int, int]:
    state = np.random.SeedSequence((master_seed, point, rep)).generate_state(3, dtype=np.uint64)
    return int(state[0]), int(state[1]), int(state[2])


def _draw_pair(spec: SweepSpec, grid_value, x_seed: int, y_seed: int):
    if spec.axis == "sample_size":
        n = int(grid_value)
        m = n
        effect = spec.effect
    else:
        n = spec.n
        m = spec.m if spec.m is not None else spec.n
        effect = float(grid_value)

    if spec.setting == GAUSS_MIXTURE:
        x = sample_gauss_mixture(GaussMixtureSetting(1.0, n, x_seed))
        y = sample_gauss_mixture(GaussMixtureSetting(effect, m, y_seed))
    elif spec.setting == PERTURBED_UNIFORM:
        x = sample_perturbed_uniform(PerturbedUniformSetting(0.0, spec.dim, n, x_seed))
        y = sample_perturbed_uniform(PerturbedUniformSetting(effect, spec.dim, m, y_seed))
    elif spec.setting == SHIFTED_GAUSSIAN:
        x = sample_shifted_gaussian(n, spec.dim, 0.0, 1.0, x_seed)
        y = sample_shifted_gaussian(m, spec.dim, effect, 1.0, y_seed)
    else:
        x = sample_shifted_gaussian(n, spec.dim, 0.0, 1.0, x_seed)
        y = sample_shifted_gaussian(m, spec.dim, 0.0, 1.0, y_seed)
    return x, y


def power_sweep(spec: SweepSpec) -> PowerCurve:
    """Rejection rate of each test at each grid point, with raw counts and
    Wilson intervals.  Identical specs give identical curves for any thread
    count."""

    def one(args):
        point, rep = args
        x_seed, y_seed, test_seed = _derived_seeds(spec.master_seed, point, rep)
        x, y = _draw_pair(spec, spec.grid[point], x_seed, y_seed)
        return {
            test_id: run_named_test(test_id, x, y, spec.alpha, spec.b, test_seed).reject
            for test_id in spec.tests
        }

    tasks = [(point, rep) for point in range(len(spec.grid)) for rep in range(spec.reps)]
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            outcomes = list(pool.map(one, tasks))
    else:
        outcomes = [one(task) for task in tasks]

    cells = []
    for point, grid_value in enumerate(spec.grid):
        start = point * spec.reps
        per_point = outcomes[start : start + spec.reps]
        for test_id in spec.tests:
            count = sum(out[test_id] for out in per_point)
            lo, hi = wilson_interval(count, spec.reps)
            cells.append(
                PowerCell(test_id, float(grid_value), spec.reps, count, count / spec.reps, lo, hi)
            )
    return PowerCurve(spec, tuple(cells))


def level_calibration(
    setting: str,
    reps: int,
    tests=TEST_IDS,
    alpha: float = 0.05,
    b: int = 500,
    seed: int = 0,
    n: int = 100,
    dim: int = 1,
    threads: int = 1,
) -> PowerCurve:
    """Power sweep restricted to the null point of the chosen setting."""
    if setting not in SETTINGS:
        raise InvalidConfigError(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    spec = SweepSpec(
        setting=setting,
        grid=(NULL_EFFECTS[setting],),
        reps=reps,
        tests=tuple(tests),
        alpha=alpha,
        b=b,
        master_seed=seed,
        n=n,
        dim=dim,
        threads=threads,
    )
    return power_sweep(spec)


def fuse1_lambda_limit(n: int, kappa: float = 1.0) -> float:
    """Largest admissible temperature for the un-normalised null bound."""
    return math.sqrt(n * (n - 1.0)) / (8.0 * math.sqrt(2.0) * kappa)


def fusen_lambda_limit(n: int) -> float:
    """Largest admissible temperature for the normalised null bound."""
    return math.sqrt(n * (n - 1.0)) / (16.0 * math.sqrt(2.0))


@dataclass(frozen=True)
class ConcentrationReport:
    """Empirical tail behaviour of both fused statistics under the null
    against their theoretical bounds."""

    n: int
    m: int
    lam: float
    t: float
    delta: float
    reps: int
    kappa: float
    upper_bound_fuse1: float
    upper_bound_fusen: float
    lower_bound_fuse1: float
    lower_bound_fusen: float
    upper_violations_fuse1: float
    upper_violations_fusen: float
    lower_violations_fuse1: float
    lower_violations_fusen: float
    mc_slack: float = field(default=0.0)

    @property
    def passed(self) -> bool:
        limit = self.delta + self.mc_slack
        return all(
            frac <= limit
            for frac in (
                self.upper_violations_fuse1,
                self.upper_violations_fusen,
                self.lower_violations_fuse1,
                self.lower_violations_fusen,
            )
        )


def null_concentration_report(
    n: int,
    m: int,
    lam: float,
    t: float,
    delta: float,
    reps: int,
    seed: int = 0,
    dim: int = 1,
    families=DEFAULT_FAMILIES,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> ConcentrationReport:
    """Simulate null draws and report how often each fused statistic
    exceeds its high-probability bound.

    With probability at least 1 - delta the un-normalised statistic is at
    most 4 kappa^2 lam / (n (n-1)) + log(1/delta) / lam (temperature below
    sqrt(n (n-1)) / (8 sqrt(2) kappa)), and the normalised statistic is at
    most 16 lam / (n (n-1)) + log(1/delta) / lam (temperature below
    sqrt(n (n-1)) / (16 sqrt(2))).  The mirrored bounds hold for the
    negated statistics with temperature ``t``.  Violation fractions should
    therefore stay below delta up to Monte-Carlo noise.
    """
    if n < 2 or m < 2:
        raise InvalidInputError("n and m must be >= 2")
    if not 0.0 < delta < 1.0:
        raise InvalidConfigError(f"delta must be in (0, 1), got {delta}")
    if reps < 1:
        raise InvalidConfigError(f"reps must be >= 1, got {reps}")
    kappa = 1.0
    limit = min(fuse1_lambda_limit(n, kappa), fusen_lambda_limit(n))
    for label, value in (("lam", lam), ("t", t)):
        if not 0.0 < value < limit:
            raise InvalidConfigError(
                f"{label}={value:g} outside the admissible range (0, {limit:g}) "
                f"= (0, min(sqrt(n(n-1))/(8*sqrt(2)*kappa), sqrt(n(n-1))/(16*sqrt(2))))"
            )

    pair_count = n * (n - 1.0)
    log_term = math.log(1.0 / delta)
    up1 = 4.0 * kappa**2 * lam / pair_count + log_term / lam
    upn = 16.0 * lam / pair_count + log_term / lam
    low1 = 4.0 * kappa**2 * t / pair_count + log_term / t
    lown = 16.0 * t / pair_count + log_term / t

    counts = {"up1": 0, "upn": 0, "low1": 0, "lown": 0}
    for rep in range(reps):
        x_seed, y_seed, _ = _derived_seeds(seed, 0, rep)
        x = sample_shifted_gaussian(n, dim, 0.0, 1.0, x_seed)
        y = sample_shifted_gaussian(m, dim, 0.0, 1.0, y_seed)
        pooled = PooledSample.from_samples(x, y)
        bank = build_kernel_bank(pooled, families, grid_size)
        stack = gram_stack(bank, pooled)
        ident = identity_perm(pooled.size)[None, :]
        mmds = np.vstack([batch_mmd_u(g, n, m, ident) for g in stack.grams])
        fuse1 = float(
            fuse_values_from_mmds(mmds, stack.normalizers, bank, VARIANT_UNNORMALIZED, lam)[0]
        )
        fusen = float(
            fuse_values_from_mmds(mmds, stack.normalizers, bank, VARIANT_NORMALIZED, lam)[0]
        )
        fuse1_t = float(
            fuse_values_from_mmds(mmds, stack.normalizers, bank, VARIANT_UNNORMALIZED, t)[0]
        )
        fusen_t = float(
            fuse_values_from_mmds(mmds, stack.normalizers, bank, VARIANT_NORMALIZED, t)[0]
        )
        counts["up1"] += fuse1 > up1
        counts["upn"] += fusen > upn
        counts["low1"] += -fuse1_t > low1
        counts["lown"] += -fusen_t > lown

    return ConcentrationReport(
        n=n,
        m=m,
        lam=lam,
        t=t,
        delta=delta,
        reps=reps,
        kappa=kappa,
        upper_bound_fuse1=up1,
        upper_bound_fusen=upn,
        lower_bound_fuse1=low1,
        lower_bound_fusen=lown,
        upper_violations_fuse1=counts["up1"] / reps,
        upper_violations_fusen=counts["upn"] / reps,
        lower_violations_fuse1=counts["low1"] / reps,
        lower_violations_fusen=counts["lown"] / reps,
        mc_slack=3.0 * math.sqrt(delta * (1.0 - delta) / reps),
    )


@dataclass(frozen=True)
class ScalingEntry:
    n: int
    seconds: float


@dataclass(frozen=True)
class ScalingReport:
    entries: tuple
    loglog_slope: float
    dim: int
    kernels: int
    b: int
    repeats: int


def measure_runtime(
    n: int, dim: int, kernels: int, b: int, seed: int = 0, repeats: int = 3
) -> float:
    """Median wall time of one full fused test at the given size.

    Timing covers bank construction, the gram stack, and all permutation
    statistics; data generation is excluded.
    """
    x = sample_shifted_gaussian(n, dim, 0.0, 1.0, seed)
    y = sample_shifted_gaussian(n, dim, 0.0, math.sqrt(1.1), seed + 1)
    config = TestConfig(b=b, seed=seed, families=(GAUSSIAN,), grid_size=kernels)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        run_test(x, y, config)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def runtime_scaling(
    sizes, dim: int = 10, kernels: int = 10, b: int = 200, seed: int = 0, repeats: int = 3
) -> ScalingReport:
    """Wall-clock of the fused test across sample sizes, with the fitted
    log-log slope (quadratic cost shows up as a slope near 2)."""
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes) or len(sizes) < 1:
        raise InvalidInputError("sizes must be a nonempty ascending list")
    entries = tuple(
        ScalingEntry(n, measure_runtime(n, dim, kernels, b, seed, repeats)) for n in sizes
    )
    if len(entries) >= 2:
        slope = float(
            np.polyfit(
                np.log([e.n for e in entries]), np.log([e.seconds for e in entries]), 1
            )[0]
        )
    else:
        slope = float("nan")
    return ScalingReport(entries, slope, dim, kernels, b, repeats)
