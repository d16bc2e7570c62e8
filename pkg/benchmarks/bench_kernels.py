"""Compiled vs pure-Python tableau kernels.

    python3 benchmarks/bench_kernels.py [--shots 20000] [--n 1,2,3]

Prints one line per (kernel, n) with the best-of-3 time of each backend and
the speedup. Both backends must give identical output on the same draws.
"""

import argparse
import time

import numpy as np

from vdshadow import kernels
from vdshadow.clifford import draw_clifford_choices


def best_of(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--shots", type=int, default=20000)
    p.add_argument("--n", default="1,2,3")
    args = p.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    py, cy = kernels.python_backend, kernels.compiled_backend
    print(f"{'kernel':<26}{'n':>3}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for n in (int(s) for s in args.n.split(",")):
        rng = np.random.default_rng(n)
        ks, bits, signs = draw_clifford_choices(rng, n, args.shots)
        t_py, tab_py = best_of(lambda: py.random_symplectic_batch(ks, bits))
        t_cy, tab_cy = best_of(lambda: cy.random_symplectic_batch(ks, bits))
        assert np.array_equal(tab_py, tab_cy)
        print(f"{'random_symplectic_batch':<26}{n:>3}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>10.1f}")
        t_py, u_py = best_of(lambda: py.tableau_to_unitary_batch(tab_cy, signs))
        t_cy, u_cy = best_of(lambda: cy.tableau_to_unitary_batch(tab_cy, signs))
        assert np.allclose(u_py, u_cy)
        print(f"{'tableau_to_unitary_batch':<26}{n:>3}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
