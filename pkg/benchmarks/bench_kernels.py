"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the two hot kernels (local matrix assembly, error accumulation) on a
refined L-shape workload and reports best-of-N wall times for both paths.

    python3 benchmarks/bench_kernels.py [--levels 5] [--repeat 5]

The active path of the installed package is controlled by the environment
variable STOKESBC_NUMBA (0 disables numba); this script always times both.
"""

import argparse
import time

import numpy as np

from stokesbc import _kernels
from stokesbc.fe_spaces import TAYLOR_HOOD, _tabulate, build_dofmap, quadrature
from stokesbc.mesh import build_domain, refine_uniform


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--levels", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    mesh = build_domain("nonconvex")
    for _ in range(args.levels):
        mesh = refine_uniform(mesh)
    dofmap = build_dofmap(mesh, TAYLOR_HOOD)
    rule = quadrature(10)
    _, grads_v = _tabulate(TAYLOR_HOOD, "velocity", rule.points)
    vals_v, _ = _tabulate(TAYLOR_HOOD, "velocity", rule.points)
    vals_p, _ = _tabulate(TAYLOR_HOOD, "pressure", rule.points)
    tri_xy = np.ascontiguousarray(mesh.vertices[mesh.triangles])
    grads_v = np.ascontiguousarray(grads_v)

    rng = np.random.default_rng(0)
    nt, nq = mesh.n_triangles, len(rule.weights)
    coef = rng.standard_normal((nt, 6, 2))
    wdet = rng.random((nt, nq))
    exact = rng.standard_normal((nt, nq, 2))
    invjt = np.tile(np.eye(2), (nt, 1, 1))
    exact_grad = rng.standard_normal((nt, nq, 2, 2))

    print(f"workload: {nt} triangles, {nq} quadrature points, "
          f"numba available: {_kernels.USE_NUMBA}")
    rows = []

    def bench(name, np_fn, nb_fn):
        t_np = best_of(np_fn, args.repeat)
        if nb_fn is not None:
            nb_fn()  # compile outside the timing loop
            t_nb = best_of(nb_fn, args.repeat)
            rows.append((name, t_np, t_nb, t_np / t_nb))
        else:
            rows.append((name, t_np, float("nan"), float("nan")))

    nb = _kernels if _kernels.USE_NUMBA else None
    bench("local_matrices",
          lambda: _kernels._local_matrices_np(tri_xy, grads_v, vals_p,
                                              rule.weights),
          (lambda: nb._local_matrices_nb(tri_xy, grads_v, vals_p,
                                         rule.weights)) if nb else None)
    bench("l2_accumulate",
          lambda: _kernels._l2_accumulate_np(coef, vals_v, wdet, exact),
          (lambda: nb._l2_accumulate_nb(coef, vals_v, wdet, exact))
          if nb else None)
    bench("h1_accumulate",
          lambda: _kernels._h1_accumulate_np(coef, grads_v, invjt, wdet,
                                             exact_grad),
          (lambda: nb._h1_accumulate_nb(coef, grads_v, invjt, wdet,
                                        exact_grad)) if nb else None)

    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}")
    for name, t_np, t_nb, ratio in rows:
        print(f"{name:<16}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}"
              f"{ratio:>9.2f}")


if __name__ == "__main__":
    main()
