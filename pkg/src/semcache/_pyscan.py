"""Pure-Python fallback for the compiled similarity-scan kernels.

Used when the semcache._simscan extension is unavailable (or when forced
via SEMCACHE_KERNEL=python). Same sequential-accumulation semantics as
the compiled version; expect it to be much slower on large caches.
"""

from __future__ import annotations

from collections.abc import Sequence


def dot(a: Sequence[float], b: Sequence[float]) -> float:
    """Dot product of two equal-length vectors."""
    if len(b) != len(a):
        raise ValueError(f"vector length mismatch: {len(a)} vs {len(b)}")
    acc = 0.0
    for x, y in zip(a, b):
        acc += x * y
    return acc


def scan_scores(matrix: Sequence[float], rows: int, dim: int,
                query: Sequence[float], out) -> None:
    """Dot product of `query` against every row of a flat row-major matrix.

    Scores are written into `out`, one per row.
    """
    if len(matrix) != rows * dim:
        raise ValueError(f"matrix buffer holds {len(matrix)} values, "
                         f"expected {rows * dim}")
    if len(query) != dim:
        raise ValueError(f"query has dimension {len(query)}, expected {dim}")
    if len(out) != rows:
        raise ValueError(f"output buffer holds {len(out)} slots, "
                         f"expected {rows}")
    q = list(query)
    for r in range(rows):
        acc = 0.0
        base = r * dim
        for j in range(dim):
            acc += matrix[base + j] * q[j]
        out[r] = acc
