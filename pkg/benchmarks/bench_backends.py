#!/usr/bin/env python3
"""Benchmark the compiled batch kernel against the pure-Python fallback.

Both backends consume identical pre-drawn randomness, so their tallies must
agree exactly; the script checks that while timing them.

Usage:
    python3 benchmarks/bench_backends.py --pulses 2000000 --distance 50
"""

import argparse
import time

import numpy as np

from bellqkd import kernels, protocol
from bellqkd.config import RunConfig


def run_once(cfg, backend):
    start = time.perf_counter()
    tally = protocol.run_monte_carlo(cfg, backend=backend)
    return tally, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pulses", type=lambda s: int(float(s)), default=2_000_000)
    parser.add_argument("--distance", type=float, default=50.0)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    cfg = RunConfig(
        distance_km=args.distance, n_pulses=args.pulses, seed=args.seed
    ).protocol_config()

    backends = ["python"]
    if kernels.compiled_available():
        backends.insert(0, "compiled")
    else:
        print("note: compiled kernel not built, timing the fallback only")

    results = {}
    tallies = {}
    for name in backends:
        best = float("inf")
        for _ in range(args.repeats):
            tally, elapsed = run_once(cfg, name)
            best = min(best, elapsed)
        results[name] = best
        tallies[name] = tally
        rate = args.pulses / best / 1e6
        print(f"{name:>9}: {best:8.3f} s  ({rate:7.2f} Mpulses/s)")

    if len(backends) == 2:
        fast, slow = tallies["compiled"], tallies["python"]
        same = (
            np.array_equal(fast.sifted, slow.sifted)
            and np.array_equal(fast.errors, slow.errors)
            and np.array_equal(fast.sent, slow.sent)
            and fast.detected == slow.detected
        )
        if not same:
            raise SystemExit("backend tallies disagree -- this is a bug")
        speedup = results["python"] / results["compiled"]
        print(f"tallies identical; compiled speedup {speedup:.1f}x")


if __name__ == "__main__":
    main()
