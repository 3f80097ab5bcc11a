"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports best-of-n wall time per kernel and the max difference between
backends.
"""

import argparse
import timeit

import numpy as np

from vortwave import kernels
from vortwave.laminar import solve_laminar
from vortwave.vorticity import VorticityModel


def _cases():
    model = VorticityModel.sine(1.5, 2.0, 0.3, 0.5)
    lam, h, n = 2.0, 1.0, 4096
    lamflow = solve_laminar(model, lam, h, M=n // 2, substeps=1)
    psi, dpsi = lamflow.fine[:, 0], lamflow.fine[:, 2]
    rng = np.random.default_rng(0)
    N, M = 64, 256
    off = np.full((N + 1, M - 1), 1.0)
    diag = -(2.0 + 0.5 * rng.random((N + 1, M - 1)))
    rhs = rng.standard_normal((N + 1, M - 1))
    return {
        "laminar_rk4": lambda b: kernels.laminar_rk4(model, lam, h, n, backend=b),
        "beta_rk4": lambda b: kernels.beta_rk4(model, -4.0, h, n // 2, psi, dpsi, backend=b),
        "tridiag_solve": lambda b: kernels.tridiag_solve(off, diag, off, rhs, backend=b),
    }


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    if kernels.ext is None:
        print("compiled extension unavailable; timing the Python path only")
    print(f"{'kernel':<16}{'compiled [ms]':>15}{'python [ms]':>14}{'speedup':>10}{'max diff':>12}")
    for name, fn in _cases().items():
        t_py = min(timeit.repeat(lambda: fn("python"), number=1, repeat=args.repeat)) * 1e3
        if kernels.ext is not None:
            t_c = min(timeit.repeat(lambda: fn(None), number=1, repeat=args.repeat)) * 1e3
            diff = float(np.max(np.abs(fn(None) - fn("python"))))
            print(f"{name:<16}{t_c:>15.3f}{t_py:>14.3f}{t_py / t_c:>10.1f}{diff:>12.2e}")
        else:
            print(f"{name:<16}{'-':>15}{t_py:>14.3f}{'-':>10}{'-':>12}")


if __name__ == "__main__":
    main()
