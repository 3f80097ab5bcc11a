import math

import numpy as np
import pytest

from vortwave import spectral
from vortwave.continuation import Constraint, bifurcation_tangent, newton_correct
from vortwave.diagnostics import (downstream_check, f_field, f_surface_identity, geometry, nodal_check,
                                  self_intersection_location, stagnation_scan, wave_report)
from vortwave.laminar import find_bifurcation
from vortwave.operator import Discretization, Problem, State
from vortwave.vorticity import VorticityModel

L, H = 2 * math.pi, 1.0


def small_wave(model, bracket, amp=0.02, branch=1, N=32, M=128):
    lam0 = find_bifurcation(model, H, L, 1, bracket)[0].lam
    disc = Discretization(L, H, N, M)
    pr = Problem(model, disc)
    t = branch * bifurcation_tangent(model, lam0, 1, disc)
    X = pr.trivial(lam0).vector() + amp * t
    res = newton_correct(State.from_vector(pr, X), Constraint.fixed_amplitude(disc, 1, X[2]))
    return lam0, res.state


@pytest.fixture(scope="module")
def waves():
    out = {}
    for key, model, br in [("const_neg", VorticityModel.constant(1.5), (-8, -0.3)),
                           ("const_pos", VorticityModel.constant(1.5), (0.3, 8)),
                           ("zero", VorticityModel.zero(), (0.3, 8))]:
        for b in (1, -1):
            out[key, b] = small_wave(model, br, branch=b)
    return out


def test_trivial_state_reports():
    st_ = Problem(VorticityModel.constant(1.5), Discretization(L, H, 8, 64)).trivial(2.0)
    rep = nodal_check(st_)
    assert rep.flat and not rep.nodal_ok
    _, verdict = f_field(st_)
    assert verdict == "degenerate-flat"
    assert downstream_check(st_) == (True, True)
    assert stagnation_scan(st_) == []
    assert geometry(st_)["wave_height"] == 0.0


@pytest.mark.parametrize("key", ["const_neg", "const_pos", "zero"])
@pytest.mark.parametrize("branch", [1, -1])
def test_nodal_pattern_small_waves(waves, key, branch):
    lam0, st_ = waves[key, branch]
    rep = nodal_check(st_, lam0, branch)
    assert rep.nodal_ok, rep.failures()
    assert not rep.flat
    mirrored = nodal_check(st_, lam0, -branch)
    assert not mirrored.monotone_crest_to_trough
    assert "crest_curvature" in mirrored.failures()
    ff, verdict = f_field(st_, branch)
    assert verdict == "positive"
    assert f_field(st_, -branch)[1] == "not positive"


def test_f_traces_vanish(waves):
    _, st_ = waves["const_neg", 1]
    ff, _ = f_field(st_)
    assert np.all(ff.values[:, 0] == 0) and np.all(ff.values[:, -1] == 0)
    assert np.max(np.abs(ff.values[0])) <= 1e-10
    assert ff.X.shape == ff.values.shape


@pytest.mark.parametrize("key", ["const_neg", "const_pos", "zero"])
def test_f_surface_identity(waves, key):
    _, st_ = waves[key, 1]
    direct, ident = f_surface_identity(st_)
    assert np.max(np.abs(direct - ident)) <= 1e-8
    assert np.max(np.abs(direct)) > 1e-4


def test_downstream_small_waves(waves):
    for b in (1, -1):
        lam0, st_ = waves["zero", b]
        assert downstream_check(st_, lam0) == (True, True)
        lam0, st_ = waves["const_pos", b]
        assert downstream_check(st_, lam0) == (True, True)


def test_f_field_refuses_degenerate_map():
    disc = Discretization(L, 0.3, 4, 32)
    pr = Problem(VorticityModel.zero(), disc)
    st_ = State(pr, 3.0, 0.0, np.array([0.3, 0, 0, 0.0]), np.zeros((5, 33)))
    with pytest.raises(ValueError, match="min K"):
        f_field(st_, min_K=2.0)


def test_stagnation_scan_critical_layer():
    model = VorticityModel.affine(-2.0, 1.0)
    st_ = Problem(model, Discretization(L, H, 8, 256)).trivial(-0.5)
    hits = stagnation_scan(st_)
    assert hits
    ys = np.array([p[1] for p in hits])
    psi_y = st_.laminar.psi_y
    y0 = st_.disc.y[np.argmin(np.abs(psi_y))]
    assert np.max(np.abs(ys - y0)) < 0.05
    assert len({p[0] for p in hits}) == len(hits) // len(set(ys))
    assert stagnation_scan(st_, threshold=0.0) == []
    assert stagnation_scan(Problem(VorticityModel.zero(), st_.disc).trivial(-0.5)) == []


def test_self_intersection_location_matches_predicate():
    disc = Discretization(L, 2.0, 4, 32)
    pr = Problem(VorticityModel.zero(), disc)
    bad = State(pr, 5.0, 20.0, np.array([0.9, 0.0, 0.45, 0.0]), np.zeros((5, 33)))
    good = pr.trivial(2.0)
    assert spectral.self_intersects(bad.w, disc.h)
    loc = self_intersection_location(bad)
    assert loc is not None and len(loc) == 2
    assert self_intersection_location(good) is None


def test_wave_report_serializes(waves):
    lam0, st_ = waves["const_neg", 1]
    rep = wave_report(st_, lam0, 1)
    d = rep.to_dict()
    assert d["nodal"]["nodal_ok"] and d["f_positive"] and d["self_intersection"] is None
    assert d["geometry"]["wave_height"] > 0
    import json
    json.dumps(d)
