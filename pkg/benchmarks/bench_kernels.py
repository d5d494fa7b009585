"""Time the numba and numpy kernel backends side by side.

    python3 benchmarks/bench_kernels.py [--m 2000] [--n 500] [--draws 200000]

Both backends are imported directly, so ``ANCHORSEEK_DISABLE_JIT`` does not
matter here. The first numba call of each kernel is a warm-up and is not
timed.
"""

import argparse
import time

import numpy as np

from anchorseek.fkv import fkv_sketch
from anchorseek.kernels import _numpy

try:
    from anchorseek.kernels import _numba
except ImportError:  # numba missing
    _numba = None
from anchorseek.sample_model import SampledMatrix


def best_of(fn, repeat=3):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(a, d, draws):
    rng = np.random.default_rng(0)
    us = rng.random(draws)
    rows = rng.integers(a.m, size=draws)
    cols = rng.integers(a.n, size=draws)
    idx = rng.integers(a.n, size=min(draws, 20000))
    trees, signs, base, norm2, T, C, nu2 = d.stack()
    w = rng.standard_normal(d.rank)
    tree = a.row_norms.tree
    return {
        "descend": lambda be: be.descend(tree, a.base_m, us),
        "descend_rows": lambda be: be.descend_rows(a.row_trees, rows, a.base_n, us),
        "gather": lambda be: be.gather(a.row_trees, a.row_signs, a.base_n, rows, cols),
        "combo_entries": lambda be: be.combo_entries(trees, signs, base, T, C, idx),
        "combo_reject": lambda be: be.combo_reject(trees, signs, base, norm2, T, C, nu2, w,
                                                   2000, np.random.default_rng(1), 10 ** 6, 10 ** 7),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=2000)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--draws", type=int, default=200_000)
    args = ap.parse_args()

    rng = np.random.default_rng(42)
    A = rng.random((args.m, args.k)) @ rng.random((args.k, args.n))
    a = SampledMatrix(A)
    d = fkv_sketch(a, args.k, 0.1, 0.1, rng, rows=96, cols=96)
    backends = [("numpy", _numpy)] + ([("numba", _numba)] if _numba else [])

    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for name, fn in cases(a, d, args.draws).items():
        t = [best_of(lambda be=be: fn(be)) for _, be in backends]
        speed = f"{t[0] / t[1]:9.1f}x" if len(t) == 2 else ""
        print(f"{name:<16}" + "".join(f"{v * 1e3:10.2f}ms" for v in t) + speed)


if __name__ == "__main__":
    main()
