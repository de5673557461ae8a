"""Reading and writing numeric matrices as delimited text.

One observation per line, comma or whitespace separated, ``#`` starts a
comment line.  Written values use the shortest decimal representation that
round-trips, so write -> read is lossless.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import DataFormatError


def read_matrix(path) -> np.ndarray:
    """Parse a delimited numeric text file into a float64 matrix."""
    text = Path(path).read_text()
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = [t for t in stripped.replace(",", " ").split() if t]
        values = []
        for token in tokens:
            try:
                value = float(token)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: non-numeric token {token!r}"
                ) from None
            if not math.isfinite(value):
                raise DataFormatError(
                    f"{path}: line {lineno}: non-finite value {token!r}"
                )
            values.append(value)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DataFormatError(
                f"{path}: line {lineno}: expected {width} values per row, got {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows found")
    return np.array(rows, dtype=np.float64)


def write_matrix(path, matrix) -> None:
    """Write a matrix with one comma-separated observation per line."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    lines = [",".join(repr(float(v)) for v in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n")
