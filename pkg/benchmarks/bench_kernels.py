"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the comparison does not depend on
RADARGAP_DISABLE_NUMBA.  Each kernel is warmed up once (numba compiles on
first call) and then timed; results of the two backends are checked for
agreement before timing.
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from radargap.kernels import numba_backend, numpy_backend


def _cases(rng):
    rects = np.array([[20.0, 2.0, 0.3, 4.5, 1.8], [35.0, -6.0, 1.2, 4.5, 1.8], [50.0, 8.0, -0.4, 12.0, 2.5]])
    angles = np.linspace(-math.radians(60), math.radians(60), 241)
    origin = np.zeros(2)
    pts = rng.uniform([5, -30], [80, 30], size=(400, 2))
    X = rng.normal(size=(40, 3))
    Y = rng.normal(size=(37, 3))
    A = rng.normal(size=(2000, 3))
    B = rng.normal(size=(2000, 3))
    return {
        "ray_cast (241 rays, 3 boxes)": lambda m: m.ray_cast(origin, angles, rects, 100.0),
        "segments_blocked (400 pts)": lambda m: m.segments_blocked(origin, pts, rects),
        "nearest_distances (2000x2000)": lambda m: m.nearest_distances(A, B),
        "emd_uniform (40x37)": lambda m: m.emd_uniform(X, Y),
    }


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-9, atol=1e-9)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    cases = _cases(np.random.default_rng(args.seed))
    print(f"{'kernel':32s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, fn in cases.items():
        ref, fast = fn(numpy_backend), fn(numba_backend)  # warm-up and compile
        if not _agree(ref, fast):
            raise SystemExit(f"{name}: backends disagree")
        times = {}
        for label, mod in (("numpy", numpy_backend), ("numba", numba_backend)):
            n = max(1, args.repeat)
            times[label] = min(timeit.repeat(lambda: fn(mod), number=n, repeat=3)) / n * 1e3
        print(f"{name:32s} {times['numpy']:10.3f} {times['numba']:10.3f} {times['numpy'] / times['numba']:7.1f}x")


if __name__ == "__main__":
    main()
