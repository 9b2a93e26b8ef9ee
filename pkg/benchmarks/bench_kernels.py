#!/usr/bin/env python3
"""Compare the compiled geometry kernels against the pure-Python twin.

Usage::

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 3]

Reports per-call latency for each kernel on both backends and the
speedup.  The two backends return bit-identical results (enforced by
tests/test_kernel_parity.py); this benchmark is about the cost.
"""

from __future__ import annotations

import argparse
import math
import random
import time

from collabboard.geometry import _kernels_py

try:
    from collabboard.geometry import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def _inputs(n: int, seed: int = 7):
    rng = random.Random(seed)

    def unit():
        while True:
            v = (rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
            norm = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
            if norm > 1e-6:
                return (v[0] / norm, v[1] / norm, v[2] / norm)

    rows = []
    for _ in range(n):
        p = (rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5))
        c = (rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5))
        nrm = unit()
        d = unit()
        rows.append(p + c + nrm + d + (rng.uniform(-math.pi, math.pi),
                                       rng.uniform(0.1, 3.0)))
    return rows


def _bench(fn, rows, pick, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        for row in rows:
            fn(*pick(row))
        best = min(best, time.perf_counter() - start)
    return best / len(rows)


CASES = [
    ("reflect_point", lambda r: r[0:3] + r[3:6] + r[6:9]),
    ("reflect_direction", lambda r: r[9:12] + r[6:9]),
    ("ray_plane", lambda r: r[0:3] + r[9:12] + r[3:6] + r[6:9]),
    ("rotate_about_axis", lambda r: r[0:3] + r[3:6] + r[6:9] + (r[12],)),
    ("apply_sketch_transform", lambda r: r[0:3] + r[3:6] + r[9:12] + (r[12], r[13])),
    ("ray_aabb", lambda r: r[0:3] + r[9:12] + (-1.0, -1.0, -1.0, 1.0, 1.0, 1.0)),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200_000,
                        help="calls per kernel per trial")
    parser.add_argument("--repeat", type=int, default=3,
                        help="trials (best is reported)")
    args = parser.parse_args()

    rows = _inputs(args.n)
    print(f"{args.n} calls per kernel, best of {args.repeat}\n")
    header = f"{'kernel':26} {'python ns':>10} {'compiled ns':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, pick in CASES:
        t_py = _bench(getattr(_kernels_py, name), rows, pick, args.repeat)
        if _kernels_cy is None:
            print(f"{name:26} {t_py * 1e9:10.0f} {'n/a':>12} {'n/a':>8}")
            continue
        t_cy = _bench(getattr(_kernels_cy, name), rows, pick, args.repeat)
        print(f"{name:26} {t_py * 1e9:10.0f} {t_cy * 1e9:12.0f} "
              f"{t_py / t_cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
