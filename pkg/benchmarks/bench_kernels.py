"""Time the compiled kernels against the numpy reference kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from fgrafs import _kernels_py

try:
    from fgrafs import _kernels as _compiled
except ImportError:
    _compiled = None


def cases(rng):
    N = 1000
    q = rng.standard_normal((N, 4))
    seg = q / np.linalg.norm(q, axis=1, keepdims=True)
    ax, ay = rng.standard_normal(N) * 0.05, rng.standard_normal(N) * 0.05
    beta = 1e-3 * rng.standard_normal((500, 3, N))
    w = rng.standard_normal((3, 100_000))
    return {
        "cumulative_quaternions N=1000": lambda k: k.cumulative_quaternions(seg),
        "noisy_final_quaternions 500x1000": lambda k: k.noisy_final_quaternions(ax, ay, beta),
        "ou_recursion 3x1e5": lambda k: k.ou_recursion(np.zeros(3), w, 0.99, 0.1),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _compiled is None:
        print("compiled kernels not built; run: python3 setup.py build_ext --inplace")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s} {'max diff':>9s}")
    for name, fn in cases(rng).items():
        ref, fast = fn(_kernels_py), fn(_compiled)
        diff = float(np.abs(np.asarray(ref) - np.asarray(fast)).max())
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        t_c = min(timeit.repeat(lambda: fn(_compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {t_py:11.2f} {t_c:12.3f} {t_py / t_c:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()
