import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vortwave.elliptic import (PoissonProblem, compute_A, normal_derivative_top, poisson_strip,
                               second_derivative_y, surface_normal_derivative)
from vortwave.laminar import solve_laminar
from vortwave.spectral import PeriodicScalar, StripField, strip_y
from vortwave.vorticity import VorticityModel

L, H = 2 * math.pi, 1.0
NU = 1.0


def field(N, M, fill):
    y = strip_y(H, M)
    cos = np.zeros((N + 1, M + 1))
    for k, prof in fill.items():
        cos[k] = prof(y)
    return StripField.even(L, H, cos)


def test_constant_rhs_quadratic():
    u = poisson_strip(field(3, 16, {0: lambda y: np.ones_like(y)}))
    y = u.y
    assert np.allclose(u.cos[0], y * (y + H) / 2, atol=1e-14)


def test_zero_rhs():
    assert not np.any(poisson_strip(StripField.zeros(L, H, 4, 16)).cos)


def _manufactured_error(M, k=2):
    c = (math.pi / H) ** 2 + (k * NU) ** 2
    r = field(4, M, {k: lambda y: -c * np.sin(math.pi * y / H)})
    u = poisson_strip(r)
    return np.max(np.abs(u.cos[k] - np.sin(math.pi * u.y / H)))


def test_manufactured_solution_fourth_order():
    errs = [_manufactured_error(M) for M in (16, 32, 64)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert errs[-1] < 1e-6
    assert all(12 < r < 20 for r in ratios)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 17), elements=st.floats(-1, 1)), arrays(np.float64, (4, 17), elements=st.floats(-1, 1)),
       st.floats(-3, 3))
def test_linearity(r1, r2, alpha):
    f1, f2 = StripField.even(L, H, r1), StripField.even(L, H, r2)
    lhs = poisson_strip(StripField.even(L, H, alpha * r1 + r2)).cos
    rhs = alpha * poisson_strip(f1).cos + poisson_strip(f2).cos
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_discrete_maximum_principle():
    r = field(2, 32, {0: lambda y: -2 - y * y, 1: lambda y: -0.5 * (1 + y * y)})
    u = poisson_strip(r)
    assert np.min(r.samples()) <= 0 and np.max(r.samples()) <= 0
    assert np.min(u.samples()) >= -1e-15


def test_poisson_problem_rejects_nonfinite():
    cos = np.zeros((2, 9))
    cos[1, 3] = np.nan
    with pytest.raises(ValueError):
        PoissonProblem(StripField.even(L, H, cos))


def test_surface_normal_derivative():
    assert not np.any(surface_normal_derivative(StripField.zeros(L, H, 2, 16)).a)
    errs = []
    for M in (32, 64, 128):
        A = field(2, M, {0: lambda y: np.sin(math.pi * y / H)})
        errs.append(abs(surface_normal_derivative(A).a[0] - math.pi / H))
    assert errs[-1] < 1e-6
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12


def test_second_derivative_order():
    errs = []
    for M in (32, 64):
        y = strip_y(H, M)
        errs.append(np.max(np.abs(second_derivative_y(np.exp(y), H) - np.exp(y))))
    assert errs[0] / errs[1] > 12


def _setup(model, lam=1.5, N=8, M=64):
    lamflow = solve_laminar(model, lam, H, M)
    return lamflow, N, M


def test_compute_A_trivial_and_irrotational():
    for model in (VorticityModel.constant(2.0), VorticityModel.sine(1.0, 1.0)):
        lamflow, N, M = _setup(model)
        A = compute_A(model, lamflow, PeriodicScalar.zeros(L, N), StripField.zeros(L, H, N, M))
        assert np.max(np.abs(A.cos)) < 1e-15
    model = VorticityModel.zero()
    lamflow, N, M = _setup(model)
    rng = np.random.default_rng(1)
    w = PeriodicScalar.even(L, np.concatenate([[0], 0.01 * rng.standard_normal(N)]))
    phi = StripField.even(L, H, rng.standard_normal((N + 1, M + 1)))
    assert not np.any(compute_A(model, lamflow, w, phi).cos)


def test_compute_A_dense_oracle():
    """Independent 2-d dense assembly of the same compact scheme in grid space."""
    g0, eps = 1.3, 0.05
    model = VorticityModel.constant(g0)
    lamflow, N, M = _setup(model)
    a = np.zeros(N + 1)
    a[1] = eps
    A = compute_A(model, lamflow, PeriodicScalar.even(L, a), StripField.zeros(L, H, N, M))
    P = 2 * N + 2
    x = L * np.arange(P) / P
    y = strip_y(H, M)
    X, Y = np.meshgrid(x, y)
    s = np.sinh(NU * (Y + H)) / np.sinh(NU * H)
    c = np.cosh(NU * (Y + H)) / np.sinh(NU * H)
    Vx = -eps * NU * np.sin(NU * X) * s
    Vy = 1 + eps * NU * np.cos(NU * X) * c
    rhs = g0 * (1 - Vx**2 - Vy**2)
    # Fourier second-derivative matrix on P points
    kk = np.fft.fftfreq(P, 1.0 / P) * NU
    D2 = np.real(np.fft.ifft(-(kk**2)[:, None] * np.fft.fft(np.eye(P), axis=0), axis=0))
    dy = H / M
    n = M - 1
    T = (np.diag(-2 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / dy**2
    B = (np.diag(10 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / 12
    op = np.kron(T, np.eye(P)) + np.kron(B, D2)
    r_int = rhs[1:-1].ravel()
    r_b = B @ rhs[1:-1].reshape(n, P) + (np.outer(np.eye(n)[0], rhs[0]) + np.outer(np.eye(n)[-1], rhs[-1])) / 12
    u = np.linalg.solve(op, r_b.ravel()).reshape(n, P)
    got = A.samples(P)[1:-1]
    assert r_int.size == u.size
    assert np.max(np.abs(got - u)) < 1e-12


def test_compute_A_traces_zero():
    model = VorticityModel.sine(1.0, 2.0, 0.0, 0.3)
    lamflow, N, M = _setup(model)
    rng = np.random.default_rng(3)
    w = PeriodicScalar.even(L, np.concatenate([[0], 0.02 * rng.standard_normal(N)]))
    phi = np.zeros((N + 1, M + 1))
    phi[:, 1:-1] = 0.1 * rng.standard_normal((N + 1, M - 1))
    A = compute_A(model, lamflow, w, StripField.even(L, H, phi))
    assert not np.any(A.cos[:, 0]) and not np.any(A.cos[:, -1])


def test_normal_derivative_one_sided_exact_for_quartic():
    y = strip_y(H, 20)
    u = y**4 + y
    assert normal_derivative_top(u, H) == pytest.approx(1.0, abs=1e-12)
