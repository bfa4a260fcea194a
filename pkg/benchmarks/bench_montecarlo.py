"""Compare the compiled and pure-Python Monte-Carlo overlap kernels.

Usage: python benchmarks/bench_montecarlo.py [--iters N] [--repeat R]

Both backends draw the same counter-based random stream, so the benchmark
also checks that their outputs are identical.
"""

import argparse
import sys
import time

import numpy as np

from agsc import montecarlo

CASES = [
    # (n_neurons, set size) at toy and paper scale
    (320, 30),
    (9984, 30),
    (9984, 100),
    (13312, 30),
]


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if montecarlo.BACKEND != "compiled":
        print("compiled kernel unavailable; build with `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    print(f"{'n':>6} {'size':>5} {'iters':>8} {'compiled s':>11} {'python s':>9} {'speedup':>8}  identical")
    for n, k in CASES:
        run = {b: (lambda b=b: montecarlo.overlap_counts(n, k, k, args.iters, 1, backend=b)) for b in ("compiled", "python")}
        same = np.array_equal(run["compiled"](), run["python"]())
        t_c, t_p = best_of(run["compiled"], args.repeat), best_of(run["python"], args.repeat)
        print(f"{n:>6} {k:>5} {args.iters:>8} {t_c:>11.4f} {t_p:>9.4f} {t_p / t_c:>7.1f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
