#!/usr/bin/env python3
"""Benchmark the numba and numpy Hamiltonian-assembly kernels.

The dense many-body fill is the only non-LAPACK loop that grows with the
sector dimension; this script times both backends on half-filled chains and
prints the speedup. The eigensolver itself (LAPACK) dominates end-to-end
runtime for L = 8, which is why the kernels stay interchangeable behind the
HUBQUENCH_BACKEND flag.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import time

import numpy as np

from hubquench import ChainSpec, PotentialShape, build_fock_basis
from hubquench.lattice import hamiltonian_from_potential


def time_backend(backend: str, potential, basis, repeat: int) -> float:
    # warm-up (numba compilation, caches)
    hamiltonian_from_potential(potential, 4.0, 1.0, basis, backend=backend)
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        hamiltonian_from_potential(potential, 4.0, 1.0, basis, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"{'L':>3} {'dim':>6} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    for n_sites in (4, 6, 8):
        spec = ChainSpec.half_filled(n_sites, 4.0, PotentialShape.linear(), 2.0)
        basis = build_fock_basis(n_sites, spec.n_up, spec.n_down)
        potential = spec.potential()
        t_numpy = time_backend("numpy", potential, basis, args.repeat)
        try:
            t_numba = time_backend("numba", potential, basis, args.repeat)
        except ImportError:
            print(f"{n_sites:>3} {basis.dim:>6} {t_numpy * 1e3:>12.3f} "
                  f"{'n/a':>12} {'n/a':>8}")
            continue
        print(f"{n_sites:>3} {basis.dim:>6} {t_numpy * 1e3:>12.3f} "
              f"{t_numba * 1e3:>12.3f} {t_numpy / t_numba:>8.2f}")


if __name__ == "__main__":
    main()
