#!/usr/bin/env python3
"""Benchmark the compiled eval kernels against the pure-numpy fallback.

Runs the fused LIF + delay-scheduling forward for both connectivity kinds
on both backends and prints median wall time plus the speedup. The two
backends must also agree exactly; this script asserts that.

Usage: python benchmarks/bench_backends.py [--neurons N] [--time-steps T]
       [--batch B] [--repetitions R]
"""

import argparse
import time

import numpy as np

from delaysnn import backend
from delaysnn.recurrent import init_kernel


def time_backend(fn_args, which, repetitions):
    for _ in range(2):  # warm-up
        backend.lif_forward_eval(*fn_args, backend=which)
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = backend.lif_forward_eval(*fn_args, backend=which)
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--neurons", type=int, default=256)
    ap.add_argument("--time-steps", type=int, default=100)
    ap.add_argument("--batch", type=int, default=8)
    ap.add_argument("--repetitions", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not backend.HAS_COMPILED:
        print("compiled extension not available; nothing to compare")
        return 1

    rng = np.random.default_rng(args.seed)
    n = args.neurons
    current = rng.normal(0.6, 1.0, size=(args.batch, args.time_steps, n))
    offsets = np.ascontiguousarray(1 + rng.integers(0, 33, size=n),
                                   dtype=np.int64)

    print(f"N={n} T={args.time_steps} B={args.batch} "
          f"(median of {args.repetitions} runs)\n")
    print(f"{'kind':<7} {'pure (ms)':>10} {'compiled (ms)':>14} {'speedup':>9}")
    for kind in ("conv", "dense"):
        kernel = init_kernel(kind, n, 3, seed=args.seed)
        fn_args = (current, kernel, offsets, 0.5, 1.0, True)
        tp, out_p = time_backend(fn_args, "pure", args.repetitions)
        tc, out_c = time_backend(fn_args, "compiled", args.repetitions)
        assert np.array_equal(out_p, out_c), "backend outputs diverged"
        print(f"{kind:<7} {tp * 1e3:>10.2f} {tc * 1e3:>14.2f} {tp / tc:>8.2f}x")
    print("\nbackends agree exactly on all outputs")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
