"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 16,64,128] [--repeat 5]

Prints one row per (kernel, size): best-of-``repeat`` seconds for each
backend, the speedup, and whether the outputs are bit-identical.
"""
import argparse
import timeit

import numpy as np

from amem import _fallback

try:
    from amem import _kernels
except ImportError:
    raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")


def cases(n, rng):
    a = np.ascontiguousarray(rng.standard_normal((n, n)))
    b = np.ascontiguousarray(rng.standard_normal((n, n)))
    x = rng.standard_normal(n)
    h = _fallback.hessenberg(a)
    # a contraction with a clear top eigenvalue so power iteration settles
    sym = (a + a.T) / (2 * n) + np.diag(np.linspace(0.1, 0.9, n))
    sym = np.ascontiguousarray(sym)
    return {
        "matmul": lambda k: k.matmul(a, b),
        "matvec": lambda k: k.matvec(a, x),
        "power_iteration": lambda k: k.power_iteration(sym, x, 1e-10, 5000, 3),
        "hessenberg": lambda k: k.hessenberg(a),
        "hqr": lambda k: k.hqr(h, 60),
    }


def same(p, q):
    if isinstance(p, tuple):
        return all(same(a, b) for a, b in zip(p, q))
    if isinstance(p, np.ndarray):
        return np.array_equal(p, q, equal_nan=True)
    return p == q or (p != p and q != q)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,64,128")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>5}{'compiled s':>13}{'python s':>13}{'speedup':>9}  identical")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, fn in cases(n, rng).items():
            number = 1 if n >= 64 and name in ("matmul", "hessenberg", "hqr") else 5
            tc = min(timeit.repeat(lambda: fn(_kernels), number=number, repeat=args.repeat)) / number
            tp = min(timeit.repeat(lambda: fn(_fallback), number=number, repeat=args.repeat)) / number
            print(f"{name:<16}{n:>5}{tc:>13.2e}{tp:>13.2e}{tp / tc:>9.1f}  {same(fn(_kernels), fn(_fallback))}")


if __name__ == "__main__":
    main()
