import numpy as np
import pytest

from vortwave import kernels
from vortwave.laminar import solve_beta, solve_laminar

from conftest import MODELS

needs_ext = pytest.mark.skipif(kernels.ext is None, reason="compiled extension not built")


@needs_ext
@pytest.mark.parametrize("name", sorted(MODELS))
def test_laminar_backends_agree(name):
    m = MODELS[name]
    a = kernels.laminar_rk4(m, 1.7, 1.0, 400)
    b = kernels.laminar_rk4(m, 1.7, 1.0, 400, backend="python")
    assert np.allclose(a, b, rtol=1e-14, atol=1e-14)


@needs_ext
@pytest.mark.parametrize("name", sorted(MODELS))
def test_beta_backends_agree(name):
    m = MODELS[name]
    lam = solve_laminar(m, 1.3, 1.0, 64, substeps=2)
    a = kernels.beta_rk4(m, -2.0, 1.0, 128, lam.fine[:, 0], lam.fine[:, 2])
    b = kernels.beta_rk4(m, -2.0, 1.0, 128, lam.fine[:, 0], lam.fine[:, 2], backend="python")
    assert np.allclose(a, b, rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("backend", [None, "python"])
def test_tridiag_against_dense(backend, rng):
    n, batch = 12, 3
    lower = rng.random((batch, n)) * 0.3
    upper = rng.random((batch, n)) * 0.3
    diag = 2 + rng.random((batch, n))
    rhs = rng.standard_normal((batch, n))
    x = kernels.tridiag_solve(lower, diag, upper, rhs, backend)
    for i in range(batch):
        A = np.diag(diag[i]) + np.diag(lower[i, 1:], -1) + np.diag(upper[i, :-1], 1)
        assert np.allclose(A @ x[i], rhs[i], atol=1e-13)


def test_callable_model_uses_python_path():
    from vortwave.vorticity import VorticityModel

    m = VorticityModel.custom(lambda s: 0 * s + 1.5, lambda s: 0 * s, lambda s: 0 * s, 0.0)
    ref = MODELS["constant"]
    a = solve_beta(m, 2.0, -1.0, 1.0, M=64)
    b = solve_beta(ref, 2.0, -1.0, 1.0, M=64)
    assert a.d == pytest.approx(b.d, rel=1e-13)


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")
