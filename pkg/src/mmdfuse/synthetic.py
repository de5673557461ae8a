"""Seeded generators for the synthetic benchmark distributions.

Three families: a four-mode planar Gaussian mixture whose fourth component
widens under the alternative, a perturbed uniform on the unit cube with two
smooth signed bumps per coordinate, and isotropic Gaussians for runtime
benchmarks.  Every generator is a pure function of (setting, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

#: Mixture mode centres; the last one carries the varied standard deviation.
MIXTURE_MODES = np.array(
    [[20.0, 20.0], [20.0, -20.0], [-20.0, 20.0], [-20.0, -20.0]]
)


@dataclass(frozen=True)
class GaussMixtureSetting:
    """Equal-weight mixture of four planar Gaussians at (+-20, +-20); the
    first three have unit standard deviation, the fourth has ``sigma4``.
    ``sigma4 = 1`` is the null configuration."""

    sigma4: float
    n: int
    seed: int

    def __post_init__(self):
        if not self.sigma4 > 0:
            raise InvalidInputError(f"sigma4 must be positive, got {self.sigma4}")
        if self.n < 1:
            raise InvalidInputError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class PerturbedUniformSetting:
    """Uniform on [0, 1]^dim perturbed by two signed bumps per coordinate
    with amplitude ``a`` in [0, 1].  ``a = 0`` is the null configuration;
    ``a = 1`` is the largest amplitude keeping the density nonnegative."""

    a: float
    dim: int
    n: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise InvalidInputError(f"amplitude a must be in [0, 1], got {self.a}")
        if self.dim < 1:
            raise InvalidInputError(f"dim must be >= 1, got {self.dim}")
        if self.n < 1:
            raise InvalidInputError(f"n must be >= 1, got {self.n}")


def sample_gauss_mixture(setting: GaussMixtureSetting) -> np.ndarray:
    rng = np.random.default_rng(setting.seed)
    component = rng.integers(0, 4, size=setting.n)
    noise = rng.standard_normal((setting.n, 2))
    std = np.where(component == 3, setting.sigma4, 1.0)[:, None]
    return MIXTURE_MODES[component] + std * noise


def _bump(u: np.ndarray) -> np.ndarray:
    """Smooth unit-peak bump on (-1, 1): exp(1 - 1/(1 - u^2)), zero outside."""
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def _coordinate_profile(x: np.ndarray) -> np.ndarray:
    """Signed double-bump profile on [0, 1]: a positive bump on [0, 1/2]
    and a negative one on [1/2, 1], each with peak magnitude 1.  Integrates
    to zero by sign symmetry."""
    return _bump(4.0 * (x - 0.25)) - _bump(4.0 * (x - 0.75))


def perturbed_uniform_density(x, a: float, dim: int) -> float:
    """Density 1 + a * prod_j profile(x_j) at a point of the unit cube."""
    if not 0.0 <= a <= 1.0:
        raise InvalidInputError(f"amplitude a must be in [0, 1], got {a}")
    point = np.asarray(x, dtype=np.float64).ravel()
    if point.size != dim:
        raise InvalidInputError(f"expected a point with {dim} coordinates, got {point.size}")
    if (point < 0.0).any() or (point > 1.0).any():
        raise InvalidInputError("point lies outside the unit cube")
    return float(1.0 + a * np.prod(_coordinate_profile(point)))


def _density_at(points: np.ndarray, a: float) -> np.ndarray:
    return 1.0 + a * np.prod(_coordinate_profile(points), axis=1)


def sample_perturbed_uniform(setting: PerturbedUniformSetting) -> np.ndarray:
    """Rejection sampler with the flat envelope (1 + a) * uniform.

    Proposal batches have a fixed deterministic size, so the output depends
    only on (setting, seed).
    """
    rng = np.random.default_rng(setting.seed)
    batch = max(256, 2 * setting.n)
    chunks = []
    accepted = 0
    while accepted < setting.n:
        proposals = rng.random((batch, setting.dim))
        u = rng.random(batch)
        keep = proposals[u * (1.0 + setting.a) <= _density_at(proposals, setting.a)]
        chunks.append(keep)
        accepted += keep.shape[0]
    return np.vstack(chunks)[: setting.n]


def sample_shifted_gaussian(
    n: int, dim: int, mean_shift: float = 0.0, scale: float = 1.0, seed: int = 0
) -> np.ndarray:
    """Isotropic Gaussian sample with constant mean shift per coordinate."""
    if n < 1 or dim < 1:
        raise InvalidInputError("n and dim must be >= 1")
    if not scale > 0:
        raise InvalidInputError(f"scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    return mean_shift + scale * rng.standard_normal((n, dim))
