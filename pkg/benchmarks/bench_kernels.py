"""Time the compiled and numpy kernel backends on the MC and Gram workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from koopgauss import kernels


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    # one MC trial: 1e5 samples against 5 centers in d = 3
    Z = rng.standard_normal((100_000, 3))
    X = rng.standard_normal((5, 3))
    a = rng.standard_normal(5)
    # dominance probe: 200-point Gram in d = 3
    P = rng.standard_normal((200, 3))

    cases = {
        "kernel_sum 1e5x5": lambda: kernels.kernel_sum(Z, X, a),
        "gram 200x200": lambda: kernels.gram(P, P),
    }
    names = sorted(kernels.BACKENDS)
    print(f"{'case':<20}" + "".join(f"{n:>12}" for n in names))
    for label, fn in cases.items():
        row = []
        for n in names:
            kernels.use_backend(n)
            row.append(best_of(fn, args.repeat))
        print(f"{label:<20}" + "".join(f"{1e3 * t:>10.2f}ms" for t in row))


if __name__ == "__main__":
    main()
