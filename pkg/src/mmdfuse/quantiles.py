"""Empirical quantile of a finite multiset.

One convention is used everywhere in the package: the q-quantile of a list
is the smallest element r such that the fraction of elements <= r is at
least q, i.e. the ceil(q * len)-th order statistic.  Ties and even lengths
therefore resolve downward (the "lower" convention).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError


def empirical_quantile(values, q: float) -> float:
    """Smallest element whose empirical CDF value reaches ``q``.

    ``values`` must be nonempty and ``q`` must lie in (0, 1].
    """
    if not 0.0 < q <= 1.0:
        raise InvalidInputError(f"quantile level q must be in (0, 1], got {q}")
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    size = v.size
    if size == 0:
        raise InvalidInputError("cannot take a quantile of an empty list")
    k = math.ceil(q * size)
    # Honour the literal "fraction >= q" rule even when the float product
    # q * size rounds across an integer boundary.
    if k > 1 and (k - 1) / size >= q:
        k -= 1
    elif k < size and k / size < q:
        k += 1
    k = min(max(k, 1), size)
    return float(v[k - 1])


def lower_median(values) -> float:
    """Median under the same convention (lower of the two middle values)."""
    return empirical_quantile(values, 0.5)
