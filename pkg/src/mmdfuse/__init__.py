"""Fused-kernel MMD permutation two-sample tests.

The package combines quadratic-time unbiased MMD estimates over a
data-dependent bank of kernels into a single soft-maximum statistic and
calibrates it with a permutation test, alongside median-heuristic and
data-splitting baselines, synthetic benchmark generators, and a
Monte-Carlo harness.  A compiled extension accelerates the quadratic hot
loops when available; a NumPy fallback is selected automatically
otherwise (see :mod:`mmdfuse.backends`).
"""

__version__ = "0.1.0"

from .backends import active_backend, available_backends, set_backend
from .baselines import SplitConfig, median_heuristic_test, split_test, variance_estimate_h1
from .errors import (
    DataFormatError,
    DegenerateDataError,
    DegenerateKernelError,
    InvalidConfigError,
    InvalidInputError,
    MMDFuseError,
)
from .experiments import (
    ConcentrationReport,
    PowerCell,
    PowerCurve,
    ScalingReport,
    SweepSpec,
    level_calibration,
    null_concentration_report,
    power_sweep,
    runtime_scaling,
    wilson_interval,
)
from .fuse import (
    FuseConfig,
    FuseValue,
    fuse_statistic,
    gibbs_dual_fuse1,
    kl_divergence,
    rq_fuse1,
)
from .io import read_matrix, write_matrix
from .kernels import (
    GramStack,
    KernelBank,
    KernelSpec,
    PooledSample,
    StandardizeTransform,
    bandwidth_grid,
    build_kernel_bank,
    eval_kernel,
    gram_stack,
    pairwise_distances,
    pooled_standardize,
)
from .mmd import h_kernel, h_kernel_sym, mean_gram, mmd_u
from .permutation import (
    PermutationSet,
    TestConfig,
    TestResult,
    empirical_quantile,
    p_proxy,
    run_test,
    sample_permutations,
)
from .quantiles import lower_median
from .synthetic import (
    GaussMixtureSetting,
    PerturbedUniformSetting,
    perturbed_uniform_density,
    sample_gauss_mixture,
    sample_perturbed_uniform,
    sample_shifted_gaussian,
)

__all__ = [
    "ConcentrationReport",
    "DataFormatError",
    "DegenerateDataError",
    "DegenerateKernelError",
    "FuseConfig",
    "FuseValue",
    "GaussMixtureSetting",
    "GramStack",
    "InvalidConfigError",
    "InvalidInputError",
    "KernelBank",
    "KernelSpec",
    "MMDFuseError",
    "PermutationSet",
    "PerturbedUniformSetting",
    "PooledSample",
    "PowerCell",
    "PowerCurve",
    "ScalingReport",
    "SplitConfig",
    "StandardizeTransform",
    "SweepSpec",
    "TestConfig",
    "TestResult",
    "active_backend",
    "available_backends",
    "bandwidth_grid",
    "build_kernel_bank",
    "empirical_quantile",
    "eval_kernel",
    "fuse_statistic",
    "gibbs_dual_fuse1",
    "gram_stack",
    "h_kernel",
    "h_kernel_sym",
    "kl_divergence",
    "level_calibration",
    "lower_median",
    "mean_gram",
    "median_heuristic_test",
    "mmd_u",
    "null_concentration_report",
    "p_proxy",
    "pairwise_distances",
    "perturbed_uniform_density",
    "pooled_standardize",
    "power_sweep",
    "read_matrix",
    "rq_fuse1",
    "run_test",
    "runtime_scaling",
    "sample_gauss_mixture",
    "sample_permutations",
    "sample_perturbed_uniform",
    "sample_shifted_gaussian",
    "set_backend",
    "split_test",
    "variance_estimate_h1",
    "wilson_interval",
    "write_matrix",
]
