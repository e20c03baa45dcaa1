"""Kernel backend selection for embedding similarity scans.

The compiled extension (semcache._simscan, built from Cython) is preferred;
a pure-Python implementation is used when it is missing. Selection happens
once at import time and can be forced via the SEMCACHE_KERNEL environment
variable:

    SEMCACHE_KERNEL=compiled   require the extension, fail loudly if absent
    SEMCACHE_KERNEL=python     force the pure-Python fallback
    SEMCACHE_KERNEL=auto       default behaviour

The two backends may differ in the last ulp of a score; all code paths use
whichever backend was selected, so results within a process are consistent.
"""

from __future__ import annotations

import math
import os
from array import array
from collections.abc import Iterable

from . import _pyscan

_choice = os.environ.get("SEMCACHE_KERNEL", "auto").strip().lower()
if _choice in ("", "auto"):
    try:
        from . import _simscan as _impl  # type: ignore[attr-defined]

        _BACKEND = "compiled"
    except ImportError:
        _impl = _pyscan
        _BACKEND = "python"
elif _choice in ("c", "compiled"):
    from . import _simscan as _impl  # type: ignore[attr-defined]

    _BACKEND = "compiled"
elif _choice in ("py", "python"):
    _impl = _pyscan
    _BACKEND = "python"
else:
    raise ValueError(f"unrecognized SEMCACHE_KERNEL value: {_choice!r}")


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _BACKEND


def as_vector(values: Iterable[float]) -> array:
    """Pack floats into the contiguous double array the kernels consume."""
    if isinstance(values, array) and values.typecode == "d":
        return values
    return array("d", values)


def dot(a, b) -> float:
    """Dot product of two equal-length double vectors."""
    return _impl.dot(as_vector(a), as_vector(b))


def norm(a) -> float:
    """Euclidean norm."""
    v = as_vector(a)
    return math.sqrt(_impl.dot(v, v))


def scan_scores(matrix: array, rows: int, dim: int, query) -> array:
    """Score `query` against every row of a flat row-major matrix.

    Returns an array of `rows` dot products. With unit-normalized rows and
    query, the scores are cosine similarities.
    """
    out = array("d", bytes(8 * rows))
    if rows:
        _impl.scan_scores(matrix, rows, dim, as_vector(query), out)
    return out
