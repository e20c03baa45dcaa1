# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for embedding similarity scans.

Both functions accumulate sequentially in double precision, matching the
pure-Python fallback in semcache._pyscan except for last-ulp rounding.
"""


def dot(double[::1] a, double[::1] b):
    """Dot product of two equal-length vectors."""
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0
    if b.shape[0] != n:
        raise ValueError("vector length mismatch: %d vs %d" % (n, b.shape[0]))
    for i in range(n):
        acc += a[i] * b[i]
    return acc


def scan_scores(double[::1] matrix, Py_ssize_t rows, Py_ssize_t dim,
                double[::1] query, double[::1] out):
    """Dot product of `query` against every row of a flat row-major matrix.

    Scores are written into `out`, one per row.
    """
    cdef Py_ssize_t r, j, base
    cdef double acc
    if matrix.shape[0] != rows * dim:
        raise ValueError("matrix buffer holds %d values, expected %d" %
                         (matrix.shape[0], rows * dim))
    if query.shape[0] != dim:
        raise ValueError("query has dimension %d, expected %d" %
                         (query.shape[0], dim))
    if out.shape[0] != rows:
        raise ValueError("output buffer holds %d slots, expected %d" %
                         (out.shape[0], rows))
    for r in range(rows):
        acc = 0.0
        base = r * dim
        for j in range(dim):
            acc += matrix[base + j] * query[j]
        out[r] = acc
