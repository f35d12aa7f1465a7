"""Time the numba and NumPy kernels on the same inputs.

Usage:
    python benchmarks/bench_assembly.py [--sizes 100 1000 10000] [--repeat 20]

Prints one line per (kernel, size) with the best-of-``repeat`` wall time of
each backend and the speed-up. Results are also checked for agreement.
"""

import argparse
import timeit

import numpy as np

from dropletfem import HAVE_NUMBA
from dropletfem.assembly import model_parameters
from dropletfem.kernels import assemble_arrays, element_eta_squared, gauss_unit
from dropletfem.properties import FluidPair


def make_inputs(n_elements, seed=0):
    rng = np.random.default_rng(seed)
    fp = FluidPair(gamma=0.066, rho_d=1222.0, mu_d=0.109, rho_c=1.2, mu_c=1.8e-5)
    zeta = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, n_elements - 1)]))
    L = 5 * fp.h_in
    h = fp.h_in * (1.0 + 0.2 * np.cos(3 * zeta)) + 1e-5 * rng.standard_normal(zeta.size)
    u = fp.u_in * (1.0 + 0.5 * zeta)
    s = np.gradient(h, L * zeta)
    prm = model_parameters(fp, 1e3, 1e-3, L, True)
    qx, qw = gauss_unit(3)
    fz = np.zeros((n_elements, qx.size))
    return (zeta, u, h, s, u * 0.99, h * 1.001, prm, qx, qw, fz, fz), L


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; only the NumPy backend is available")

    print(f"{'kernel':<10}{'elements':>10}{'numpy [ms]':>14}{'numba [ms]':>14}{'speed-up':>10}")
    for n in args.sizes:
        inputs, L = make_inputs(n)
        res_np, ab_np, _ = assemble_arrays(*inputs, backend="numpy")
        t_np = best_time(lambda: assemble_arrays(*inputs, backend="numpy"), args.repeat)
        if HAVE_NUMBA:
            assemble_arrays(*inputs, backend="numba")  # compile
            res_nb, ab_nb, _ = assemble_arrays(*inputs, backend="numba")
            scale = np.abs(res_np).max()
            assert np.allclose(res_nb, res_np, rtol=1e-12, atol=1e-12 * scale)
            assert np.allclose(ab_nb, ab_np, rtol=1e-12, atol=1e-12 * np.abs(ab_np).max())
            t_nb = best_time(lambda: assemble_arrays(*inputs, backend="numba"), args.repeat)
            print(f"{'assemble':<10}{n:>10}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{'assemble':<10}{n:>10}{1e3 * t_np:>14.3f}{'-':>14}{'-':>10}")

        zeta, _, h, s = inputs[:4]
        qx, qw = inputs[7], inputs[8]
        t_np = best_time(lambda: element_eta_squared(zeta, h, s, L, qx, qw, backend="numpy"), args.repeat)
        if HAVE_NUMBA:
            element_eta_squared(zeta, h, s, L, qx, qw, backend="numba")
            t_nb = best_time(lambda: element_eta_squared(zeta, h, s, L, qx, qw, backend="numba"), args.repeat)
            print(f"{'estimate':<10}{n:>10}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{'estimate':<10}{n:>10}{1e3 * t_np:>14.3f}{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
