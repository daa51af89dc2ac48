"""Throughput comparison of the numba and numpy kernel paths.

Times the three hot kernels (element geometry, density recursion,
velocity recursion) at benchmark-like sizes.  The numba path must be
available; run with LATINFLOW_NUMBA=0 to confirm the fallback wiring
instead.

Usage: python benchmarks/bench_kernels.py [--elements N] [--steps N]
"""

import argparse
import time

import numpy as np

from latinflow import _kernels
from latinflow.elements import gauss_3x3, shape_q1, shape_q2


def _reference_gradients():
    rule = gauss_3x3()
    dn2 = np.array([shape_q2(x, y)[1] for x, y in rule.points])
    dn1 = np.array([shape_q1(x, y)[1] for x, y in rule.points])
    return dn2, dn1


def _element_coords(rng, n_elem):
    base = np.array(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
         [0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5], [0.5, 0.5]]
    )
    coords = np.tile(base, (n_elem, 1, 1))
    coords += 0.05 * rng.standard_normal(coords.shape)
    return np.ascontiguousarray(coords)


def _time(fn, *args, repeat=5):
    fn(*args)                      # warm-up (numba compilation)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--elements", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=100)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    dn2, dn1 = _reference_gradients()
    coords = _element_coords(rng, args.elements)
    ngp = 9 * args.elements
    gamma = rng.standard_normal((args.steps + 1, ngp))
    beta = rng.standard_normal((args.steps + 1, ngp, 2))
    rho = np.abs(rng.standard_normal((args.steps + 1, ngp))) + 1e-6
    rho0 = np.full(ngp, 1.0)
    v0 = np.zeros((ngp, 2))
    dt, h_rho, h_v = 5e-5, 3333.0, 0.8

    print(f"numba path active: {_kernels.USING_NUMBA}")
    print(f"{args.elements} elements, {ngp} Gauss points, {args.steps} steps\n")
    rows = [
        ("geometry", (_kernels.geometry, _kernels.geometry_numpy),
         (coords, dn2, dn1)),
        ("rho recursion", (_kernels.rho_recursion, _kernels.rho_recursion_numpy),
         (gamma, rho0, dt, h_rho)),
        ("v recursion", (_kernels.v_recursion, _kernels.v_recursion_numpy),
         (beta, rho, v0, dt, h_v, 1e-30)),
    ]
    print(f"{'kernel':<15}{'active [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}")
    for name, (active, fallback), kargs in rows:
        t_active = _time(active, *kargs)
        t_numpy = _time(fallback, *kargs)
        print(f"{name:<15}{1e3 * t_active:>12.2f}{1e3 * t_numpy:>12.2f}"
              f"{t_numpy / t_active:>9.2f}x")


if __name__ == "__main__":
    main()
