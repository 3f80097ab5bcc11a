"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``VORTWAVE_BACKEND=python`` is set) the pure-Python
reference implementation is used.  Models defined by arbitrary Python
callables always run on the Python path.
"""

import os

import numpy as np

from . import _kernels_py as py

try:
    if os.environ.get("VORTWAVE_BACKEND", "").lower() == "python":
        raise ImportError("python backend requested")
    from . import _kernels as ext
except ImportError:
    ext = None

BACKEND = "compiled" if ext is not None else "python"


def _scalar_gamma(model):
    if model.code >= 0:
        return py.coded_gamma(model.code, model.params)
    f0, f1, f2 = model.gamma, model.dgamma, model.d2gamma
    return lambda s: (float(f0(s)), float(f1(s)), float(f2(s)))


def laminar_rk4(model, lam, h, nsteps, backend=None):
    if _use_ext(model, backend):
        return ext.laminar_rk4(model.code, model.params, float(lam), float(h), int(nsteps))
    return py.laminar_rk4(_scalar_gamma(model), float(lam), float(h), int(nsteps))


def beta_rk4(model, mu, h, nsteps, psi, dpsi, backend=None):
    psi = np.ascontiguousarray(psi, dtype=float)
    dpsi = np.ascontiguousarray(dpsi, dtype=float)
    if _use_ext(model, backend):
        return ext.beta_rk4(model.code, model.params, float(mu), float(h), int(nsteps), psi, dpsi)
    return py.beta_rk4(_scalar_gamma(model), float(mu), float(h), int(nsteps), psi, dpsi)


def tridiag_solve(lower, diag, upper, rhs, backend=None):
    args = [np.ascontiguousarray(a, dtype=float) for a in (lower, diag, upper, rhs)]
    if ext is not None and backend != "python":
        return ext.tridiag_solve(*args)
    return py.tridiag_solve(*args)


def _use_ext(model, backend):
    return ext is not None and backend != "python" and model.code >= 0
