"""Benchmark the numba kernels against the pure-numpy fallback.

Run as ``python -m calab.benchmark [--cells N] [--steps K]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .kernels import get_backend
from .rng import stream


def _time(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cells", type=int, default=50_000)
    parser.add_argument("--steps", type=int, default=20)
    args = parser.parse_args(argv)

    rng = stream(0, "bench", 0)
    n = args.cells
    tape152 = rng.integers(0, 7, n + 304).astype(np.int8)
    tape11 = rng.integers(0, 7, n + 22).astype(np.int8)
    tape10 = rng.integers(0, 7, n + 20).astype(np.int8)
    flag10 = rng.integers(0, 2, n + 20).astype(np.int8)
    tape2 = rng.integers(0, 7, n + 4).astype(np.int8)
    pulse3 = rng.integers(0, 2, n + 6).astype(np.int8)
    pulse2 = rng.integers(0, 2, n + 4).astype(np.int8)
    flag26 = rng.integers(0, 2, n + 52).astype(np.int8)
    tape26 = rng.integers(0, 7, n + 52).astype(np.int8)
    pulse26 = rng.integers(0, 2, n + 52).astype(np.int8)

    cases = {
        "erosion": lambda b: lambda: [b.erosion_row(pulse3) for _ in range(args.steps)],
        "emission": lambda b: lambda: [b.emission_row(tape2, pulse2) for _ in range(args.steps)],
        "isolation": lambda b: lambda: [b.isolation_row(tape152) for _ in range(args.steps)],
        "freeze": lambda b: lambda: [b.freeze_rows(flag10, tape10) for _ in range(args.steps)],
        "rotation": lambda b: lambda: [b.rotation_row(tape11) for _ in range(args.steps)],
        "settled": lambda b: lambda: [b.settled_planes(flag26, tape26, pulse26) for _ in range(args.steps)],
    }

    backends = {}
    for name in ("numba", "numpy"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"{name} backend unavailable, skipping")

    if "numba" in backends:
        # trigger jit compilation outside the timed region
        for make in cases.values():
            make(backends["numba"])()

    print(f"cells={n} steps={args.steps} (seconds, best of 5)")
    header = f"{'kernel':<12}" + "".join(f"{b:>12}" for b in backends)
    print(header)
    ratios = []
    for case, make in cases.items():
        times = {b: _time(make(mod)) for b, mod in backends.items()}
        row = f"{case:<12}" + "".join(f"{times[b]:>12.4f}" for b in backends)
        if len(times) == 2:
            ratio = times["numpy"] / times["numba"]
            ratios.append(ratio)
            row += f"   numpy/numba = {ratio:.1f}x"
        print(row)
    if ratios:
        print(f"geometric mean speedup: {np.exp(np.mean(np.log(ratios))):.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
