"""Benchmark the numba element kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--degrees 4 8 12 16]

Both paths are imported in one process (the dispatch in skinfem.kernels is
bypassed), so the comparison is apples to apples on identical inputs.
"""

import argparse
import time

import numpy as np

from skinfem import kernels
from skinfem.basis import gauss_rule, gll_points, lagrange_deriv_matrix, lagrange_matrix


def make_inputs(p: int, rng: np.random.Generator):
    nq1 = p + 3
    nodes = gll_points(p)
    gx, gw = gauss_rule(nq1)
    V = lagrange_matrix(nodes, gx)
    D = lagrange_deriv_matrix(nodes, gx)
    phi = np.einsum("ai,bj->baji", V, V).reshape(nq1 * nq1, -1)
    dphir = np.einsum("ai,bj->baji", D, V).reshape(nq1 * nq1, -1)
    dphiz = np.einsum("ai,bj->baji", V, D).reshape(nq1 * nq1, -1)
    rq = 1.0 + rng.random(nq1 * nq1)
    wq = np.outer(gw, gw).reshape(-1) * (0.5 + rng.random(nq1 * nq1))
    return phi, dphir, dphiz, rq, wq


def bench(fn, args, repeats: int) -> float:
    fn(*args)  # warm up (JIT compile / cache touch)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--degrees", type=int, nargs="+", default=[4, 8, 12, 16])
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    if not kernels.USE_NUMBA:
        print("numba path unavailable (disabled or not installed); nothing to compare")
        return

    rng = np.random.default_rng(0)
    inv_eps = 1.0 / (1.0 + 0.5j)
    kappa2 = 0.01
    print(f"{'p':>3} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for p in args.degrees:
        phi, dphir, dphiz, rq, wq = make_inputs(p, rng)

        def run_numba():
            return kernels.element_matrix(phi, dphir, dphiz, rq, wq, inv_eps, kappa2)

        def run_numpy():
            return kernels._element_matrix_numpy(phi, dphir, dphiz, rq, wq, inv_eps, kappa2)

        t_nb = bench(lambda *a: run_numba(), (), args.repeats)
        t_np = bench(lambda *a: run_numpy(), (), args.repeats)
        diff = np.max(np.abs(run_numba() - run_numpy()))
        print(f"{p:>3} {1e3 * t_nb:>12.3f} {1e3 * t_np:>12.3f} {t_np / t_nb:>8.2f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
