"""Backend selection for the quadratic hot loops.

Two interchangeable implementations exist: a compiled extension with
tight serial loops and a NumPy one that phrases the batched statistic as
a matrix product.  On BLAS-backed NumPy builds the matrix-product route
is the faster one (see ``benchmarks/compare_backends.py``), so it is the
default; the compiled core is kept as a build-independent alternative
and as a second implementation the test suite cross-checks against.
``MMDFUSE_BACKEND=cython`` (or ``numpy``) in the environment forces a
choice at import time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from . import _numpy_backend

try:
    from . import _core as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None


@dataclass(frozen=True)
class Backend:
    name: str
    sq_l2_distances: Callable
    l1_distances: Callable
    batch_mmd: Callable


_NUMPY = Backend(
    name=_numpy_backend.NAME,
    sq_l2_distances=_numpy_backend.sq_l2_distances,
    l1_distances=_numpy_backend.l1_distances,
    batch_mmd=_numpy_backend.batch_mmd,
)

if _compiled is not None:
    _CYTHON = Backend(
        name=_compiled.NAME,
        sq_l2_distances=_compiled.sq_l2_distances,
        l1_distances=_compiled.l1_distances,
        batch_mmd=_compiled.batch_mmd,
    )
    _BACKENDS = {"numpy": _NUMPY, "cython": _CYTHON}
else:
    _CYTHON = None
    _BACKENDS = {"numpy": _NUMPY}


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _default_name() -> str:
    forced = os.environ.get("MMDFUSE_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(
                f"MMDFUSE_BACKEND={forced!r} is not available; "
                f"choose one of {available_backends()}"
            )
        return forced
    return "numpy"


_active = _BACKENDS[_default_name()]


def active_backend() -> Backend:
    return _active


def set_backend(name: str) -> Backend:
    """Select the active backend by name; returns the new active backend."""
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {available_backends()}"
        ) from None
    return _active


def get_backend(name: str | None = None) -> Backend:
    """Look up a backend by name without changing the active one."""
    if name is None or name == "auto":
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {available_backends()}"
        ) from None
