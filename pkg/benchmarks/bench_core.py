"""Compiled kernels vs the numpy/Python fallback.

    python3 benchmarks/bench_core.py [--repeat 5]

Times the Jacobi eigensolver, the subgraph matcher and the RBF kernel sum on
both backends and checks that their outputs agree.
"""

import argparse
import time

import numpy as np

from heteroflow._core import get_backend
from heteroflow.datagen import random_skeleton
from heteroflow.motif import Motif, _host_arrays, _pattern_plan


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def jacobi_case(n, seed=0):
    a = np.random.default_rng(seed).standard_normal((n, n))
    a = 0.5 * (a + a.T)

    def run(k):
        d, v, _, ok = k.jacobi_eigh(a.copy(), 1e-12, 100 * n * n)
        assert ok
        return np.sort(d)

    return run


def matcher_case(n, k, seed=0):
    g = random_skeleton(n, np.random.default_rng(seed))
    m = Motif.from_edges(k, [(i, i + 1) for i in range(k - 1)] + [(0, k - 1)])
    host = _host_arrays(g)
    plan = _pattern_plan(m.pattern, None)[1:]

    def run(kern):
        return kern.match_subgraph(*host, *plan, -1, -1)

    return run


def rbf_case(p, d, seed=0):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((p, d)), rng.standard_normal((p, d))

    def run(k):
        return k.rbf_sum(x, y, 0.5)

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    compiled, python = get_backend("compiled"), get_backend("python")
    cases = [
        ("jacobi n=20", jacobi_case(20)),
        ("jacobi n=60", jacobi_case(60)),
        ("matcher cycle4 in n=40", matcher_case(40, 4)),
        ("matcher cycle5 in n=40", matcher_case(40, 5)),
        ("rbf_sum 200x200 d=16", rbf_case(200, 16)),
        ("rbf_sum 500x500 d=16", rbf_case(500, 16)),
    ]
    print(f"{'case':<26}{'compiled (s)':>14}{'python (s)':>14}{'speedup':>10}")
    for name, run in cases:
        tc, oc = best_of(lambda: run(compiled), args.repeat)
        tp, op = best_of(lambda: run(python), max(1, args.repeat // 2))
        if isinstance(oc, np.ndarray) and oc.dtype.kind == "i":
            assert np.array_equal(oc, op), name
        else:
            assert np.allclose(oc, op, rtol=1e-10, atol=1e-10), name
        print(f"{name:<26}{tc:>14.5f}{tp:>14.5f}{tp / tc:>9.1f}x", flush=True)


if __name__ == "__main__":
    main()
