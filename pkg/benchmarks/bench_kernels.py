"""Benchmark the compiled similarity-scan kernel against the pure-Python
fallback on replay-shaped workloads (a query embedding scanned against a
full cache matrix).

Usage: python benchmarks/bench_kernels.py [--entries 1021] [--dim 256]
       [--queries 200]
"""

from __future__ import annotations

import argparse
import random
import time
from array import array

from semcache import _pyscan
from semcache import kernels

try:
    from semcache import _simscan
except ImportError:
    _simscan = None


def _workload(entries: int, dim: int, queries: int,
              seed: int = 1234) -> tuple[array, list[array]]:
    rng = random.Random(seed)
    matrix = array("d", (rng.gauss(0.0, 1.0) for _ in range(entries * dim)))
    probes = [array("d", (rng.gauss(0.0, 1.0) for _ in range(dim)))
              for _ in range(queries)]
    return matrix, probes


def _time_backend(impl, matrix: array, probes: list[array],
                  entries: int, dim: int) -> float:
    out = array("d", bytes(8 * entries))
    start = time.perf_counter()
    for probe in probes:
        impl.scan_scores(matrix, entries, dim, probe, out)
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entries", type=int, default=1021)
    parser.add_argument("--dim", type=int, default=256)
    parser.add_argument("--queries", type=int, default=200)
    args = parser.parse_args()

    matrix, probes = _workload(args.entries, args.dim, args.queries)
    ops = args.entries * args.dim * args.queries

    print(f"scan workload: {args.queries} probes x {args.entries} entries "
          f"x dim {args.dim} ({ops / 1e6:.0f}M multiply-adds)")
    print(f"active backend at import: {kernels.backend()}")
    print()
    print(f"{'backend':<10s} {'seconds':>9s} {'Mops/s':>9s} {'speedup':>8s}")

    py_time = _time_backend(_pyscan, matrix, probes, args.entries, args.dim)
    print(f"{'python':<10s} {py_time:9.3f} {ops / py_time / 1e6:9.1f} {'1.0x':>8s}")

    if _simscan is None:
        print("compiled   (extension not built; pip install -e . to build it)")
        return
    c_time = _time_backend(_simscan, matrix, probes, args.entries, args.dim)
    print(f"{'compiled':<10s} {c_time:9.3f} {ops / c_time / 1e6:9.1f} "
          f"{py_time / c_time:7.1f}x")

    out_py = array("d", bytes(8 * args.entries))
    out_c = array("d", bytes(8 * args.entries))
    _pyscan.scan_scores(matrix, args.entries, args.dim, probes[0], out_py)
    _simscan.scan_scores(matrix, args.entries, args.dim, probes[0], out_c)
    drift = max(abs(a - b) for a, b in zip(out_py, out_c))
    print(f"\nmax |python - compiled| on one probe: {drift:.3e}")


if __name__ == "__main__":
    main()
