import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortwave.laminar import (closed_form_beta_y0, closed_form_dispersion, closed_form_laminar, closed_form_roots,
                              dispersion, find_bifurcation, kernel_multiplicity, prufer_bounds_check, solve_beta,
                              solve_laminar)
from vortwave.vorticity import VorticityModel

from conftest import MODELS

G = 9.81


def test_irrotational_laminar():
    f = solve_laminar(VorticityModel.zero(), 2.0, 1.5, 64)
    assert np.allclose(f.psi, 2.0 * f.y, atol=1e-14)
    assert f.m == pytest.approx(3.0, rel=1e-14)


def test_constant_laminar_mass_flux():
    f = solve_laminar(VorticityModel.constant(1.2), 0.7, 2.0, 64)
    assert f.m == pytest.approx(1.2 * 4 / 2 + 0.7 * 2, rel=1e-13)


@pytest.mark.parametrize("a", [-3.0, 0.0, 2.0])
def test_affine_laminar_closed_form(a):
    m = VorticityModel.affine(a, 0.8)
    f = solve_laminar(m, 1.1, 1.0, 256)
    assert np.allclose(f.psi, closed_form_laminar(m, 1.1, f.y), atol=1e-10)


def test_initial_conditions_exact():
    f = solve_laminar(MODELS["sine"], -1.4, 1.0, 32)
    assert f.psi[-1] == 0.0 and f.psi_y[-1] == -1.4
    assert f.dpsi[-1] == 0.0 and f.dpsi_y[-1] == 1.0


def test_mass_flux_derivative_matches_fd():
    m = MODELS["sine"]
    e = 1e-6
    f = solve_laminar(m, 1.5, 1.0, 256)
    fd = (solve_laminar(m, 1.5 + e, 1.0, 256).m - solve_laminar(m, 1.5 - e, 1.0, 256).m) / (2 * e)
    assert f.m_prime == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_mass_flux_monotone(name):
    # sup gamma' < pi^2/h^2 for all test models
    for lam in np.linspace(-4, 4, 9):
        if lam != 0:
            assert solve_laminar(MODELS[name], lam, 1.0, 128).m_prime >= 0


def test_beta_closed_forms():
    h, l = 1.0, 1.0
    r = solve_beta(VorticityModel.constant(0.7), 2.0, -l * l, h)
    assert np.allclose(r.beta, np.sinh(l * (r.y + h)) / np.sinh(l * h), atol=1e-10)
    r = solve_beta(VorticityModel.affine(1.0, 0.3), 2.0, -1.0, h)
    assert np.allclose(r.beta, (r.y + h) / h, atol=1e-10)
    r = solve_beta(VorticityModel.zero(), 2.0, 0.0, h)
    assert r.beta_y0 == pytest.approx(1 / h, rel=1e-12)


def test_dirichlet_spectrum_flag():
    h = 1.0
    # gamma' = a with a + mu = (pi/h)^2 puts zero in the Dirichlet spectrum
    m = VorticityModel.affine(math.pi**2 + 1.0, 0.0)
    r = solve_beta(m, 1.0, -1.0, h)
    assert r.in_dirichlet_spectrum and math.isinf(r.d)


@pytest.mark.parametrize("gamma0", [-2.0, 0.0, 1.5])
@pytest.mark.parametrize("k", [1, 3])
def test_constant_dispersion(gamma0, k):
    m = VorticityModel.constant(gamma0)
    for lam in (-2.5, 0.6, 3.0):
        r = dispersion(m, lam, -(k**2), 1.0)
        assert r.d == pytest.approx(closed_form_dispersion(m, k, lam, 1.0), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, -2.0])
def test_affine_dispersion_cases(a):
    m = VorticityModel.affine(a, 0.4)
    r = dispersion(m, 1.7, -1.0, 1.0)
    assert r.d == pytest.approx(closed_form_dispersion(m, 1.0, 1.7, 1.0), rel=1e-9)


def test_affine_degenerate_case_formula():
    m = VorticityModel.affine(1.0, 0.4)
    lam, h = 1.7, 1.0
    assert closed_form_dispersion(m, 1.0, lam, h) == pytest.approx(1 / h + 0.4 / lam - G / lam**2)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_d_lambda_matches_fd(name):
    m = MODELS[name]
    lam, mu, e = 1.9, -1.0, 1e-5
    r = dispersion(m, lam, mu, 1.0)
    fd = (dispersion(m, lam + e, mu, 1.0).d - dispersion(m, lam - e, mu, 1.0).d) / (2 * e)
    assert r.d_lambda == pytest.approx(fd, rel=1e-6)


def test_dispersion_rejects_zero_lambda():
    with pytest.raises(ValueError):
        dispersion(VorticityModel.zero(), 0.0, -1.0, 1.0)


def test_irrotational_roots():
    roots = find_bifurcation(VorticityModel.zero(), 1.0, 2 * math.pi, 1, (0.5, 6.0))
    assert len(roots) == 1
    assert roots[0].lam == pytest.approx(math.sqrt(G * math.tanh(1.0)), rel=1e-10)
    neg = find_bifurcation(VorticityModel.zero(), 1.0, 2 * math.pi, 1, (-6.0, -0.5))
    assert neg[0].lam == pytest.approx(-math.sqrt(G * math.tanh(1.0)), rel=1e-10)


def test_constant_roots_and_multiplicity():
    g0 = 1.5
    lm, lp = closed_form_roots(g0, 2.0, 1.0)
    roots = find_bifurcation(VorticityModel.constant(g0), 1.0, 2 * math.pi, 2, (0.2, 8.0))
    assert roots[0].lam == pytest.approx(lp, rel=1e-10)
    assert roots[0].multiplicity == 1 and roots[0].kernel_modes == (2,)
    mult, modes = kernel_multiplicity(VorticityModel.constant(g0), lm, 1.0, 2 * math.pi)
    assert mult == 1 and modes == [2]


def test_no_roots_and_generic_lambda():
    assert find_bifurcation(VorticityModel.zero(), 1.0, 2 * math.pi, 1, (4.0, 6.0)) == []
    assert kernel_multiplicity(VorticityModel.zero(), 1.234, 1.0, 2 * math.pi)[0] == 0
    with pytest.raises(ValueError):
        find_bifurcation(VorticityModel.zero(), 1.0, 2 * math.pi, 1, (-1.0, 1.0))


def test_transversality_sign_under_nodal_hypotheses():
    # constant vorticity: gamma' = 0 < pi^2/(4h^2), gamma'' = 0
    for br in ((0.2, 8.0), (-8.0, -0.2)):
        r = find_bifurcation(VorticityModel.constant(1.5), 1.0, 2 * math.pi, 1, br)[0]
        assert r.d_lambda != 0
        assert np.sign(r.d_lambda) == np.sign(r.lam)


def test_prufer_bounds():
    mus = -np.linspace(0.5, 10, 8)
    rep = prufer_bounds_check(VorticityModel.zero(), 2.0, mus, 1.0)
    for row in rep.rows:
        assert row["lower"] == pytest.approx(row["beta_y0"], rel=1e-9)
        assert row["upper"] == pytest.approx(row["beta_y0"], rel=1e-9)
    rep = prufer_bounds_check(VorticityModel.affine(-1.0, 0.5), 2.0, mus, 1.0)
    assert rep.ok
    rep = prufer_bounds_check(VorticityModel.sine(1.0, 1.0), 2.0, mus, 1.0)
    assert rep.ok
    assert all(r["lower"] < r["beta_y0"] < r["upper"] for r in rep.rows)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 4.0), st.floats(-3.0, 3.0))
def test_beta_y0_decreasing_in_mu(lam, g0):
    m = VorticityModel.sine(0.8, 1.0, 0.2, g0)
    vals = [solve_beta(m, lam, mu, 1.0, M=128).beta_y0 for mu in (-4.0, -2.0, -0.5, 1.0)]
    assert np.all(np.diff(vals) < 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 4.0), st.floats(0.1, 3.0))
def test_closed_form_beta_matches_shooting(l, h):
    m = VorticityModel.affine(-0.5, 0.1)
    r = solve_beta(m, 1.0, -l * l, h, M=256)
    assert r.beta_y0 == pytest.approx(closed_form_beta_y0(m, l, h), rel=1e-8)


def test_critical_layers():
    # affine a<0, b>0 with small negative lambda: psi_y changes sign inside the layer
    f = solve_laminar(VorticityModel.affine(-1.0, 4.0), -0.5, 1.0, 256)
    assert f.critical_layer_count() == 1
    assert solve_laminar(VorticityModel.zero(), 1.0, 1.0, 64).critical_layer_count() == 0
