"""Time the compiled and numpy kernels on the ensemble sizes used by ``verify``.

    python benchmarks/bench_kernels.py [--samples N] [--steps T] [--repeat R]
"""

import argparse
import time

import numpy as np

from schedkit import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--steps", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    n, T = args.samples, args.steps
    z0 = np.ones(n)
    decay = rng.uniform(0.5, 1.0, T)
    scale = np.sqrt(1 - decay**2)
    noise = rng.standard_normal((n, T))
    a = np.sort(rng.standard_normal((T, n)), axis=1)
    b = np.sort(rng.standard_normal((T, n)), axis=1)

    cases = {
        "ar1_recurrence": lambda be: _kernels.ar1_recurrence(z0, decay, scale, noise, backend=be),
        "ks_2samp_sorted_rows": lambda be: _kernels.ks_2samp_sorted_rows(a, b, backend=be),
        "ks_normal_sorted_rows": lambda be: _kernels.ks_normal_sorted_rows(a, backend=be),
    }
    backends = _kernels.available_backends()
    print(f"n={n} T={T} backends={backends} (best of {args.repeat})")
    print(f"{'kernel':<24}" + "".join(f"{be:>12}" for be in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        timings = {be: best_of(lambda: fn(be), args.repeat) for be in backends}
        row = f"{name:<24}" + "".join(f"{timings[be]:>11.4f}s" for be in backends)
        if "cython" in timings:
            row += f"{timings['python'] / timings['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
