"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
Run directly with ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from vortwave import cli, spectral
from vortwave.continuation import (ALTERNATIVES, Constraint, ContinuationConfig, arclength_weights,
                                   bifurcation_tangent, continue_branch, newton_correct, weighted_norm)
from vortwave.diagnostics import downstream_check, f_field, nodal_check
from vortwave.elliptic import poisson_strip
from vortwave.laminar import closed_form_dispersion, closed_form_roots, dispersion, find_bifurcation
from vortwave.operator import (Discretization, Problem, State, flattened_bernoulli_gap, linearize_trivial,
                               physical_oracle, residual)
from vortwave.spectral import PeriodicScalar, StripField, strip_y
from vortwave.vorticity import VorticityModel

sys.path.insert(0, str(Path(__file__).parent))
from conftest import MODELS  # noqa: E402

G = 9.81
L = 2 * math.pi
BRACKETS = {"zero": (0.3, 8), "constant": (-8, -0.3), "affine": (0.3, 8), "sine": (0.3, 8)}


def report(request, n, title, ok, detail):
    line = f"AC{n:02d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    request.config._acceptance_lines.append(line)
    print(line)
    assert ok, line


def test_ac01_constant_dispersion(request):
    t0 = time.perf_counter()
    worst = 0.0
    for h in (0.5, 1.0, 2.0):
        for k in range(1, 11):
            for lam in np.linspace(-3.0, 3.0, 10):
                for g0 in (-2.0, 0.5, 3.0):
                    m = VorticityModel.constant(g0)
                    d = dispersion(m, float(lam), -(k * 1.0) ** 2, h, G).d
                    ex = k / math.tanh(k * h) + g0 / lam - G / lam**2
                    worst = max(worst, abs(d - ex) / abs(ex))
    dt = time.perf_counter() - t0
    report(request, 1, "constant-vorticity dispersion", worst <= 1e-8 and dt < 5.0,
           f"900 cases, worst rel {worst:.2e}, {dt:.2f} s")


def test_ac02_affine_dispersion(request):
    worst = 0.0
    cases = []
    for h in (0.5, 1.0, 2.0):
        for k in (1, 2, 3):
            l2 = k * k
            for a in (l2 - 2.5, float(l2), l2 + 0.7):
                for b in (-1.0, 0.4):
                    for lam in (-2.3, 0.8, 1.9):
                        m = VorticityModel.affine(a, b)
                        d = dispersion(m, lam, -l2, h, G).d
                        if a == l2:
                            ex = 1.0 / h + b / lam - G / lam**2
                        else:
                            ex = closed_form_dispersion(m, k, lam, h, G)
                        cases.append(np.sign(a - l2))
                        worst = max(worst, abs(d - ex) / abs(ex))
    all_cases = set(cases) == {-1.0, 0.0, 1.0}
    report(request, 2, "affine-vorticity dispersion", worst <= 1e-8 and all_cases,
           f"{len(cases)} cases over a-l^2 <,=,> 0, worst rel {worst:.2e}")


def test_ac03_bifurcation_roots(request):
    worst = 0.0
    for h in (0.5, 1.0, 2.0):
        for g0 in (-2.0, 0.5, 3.0):
            for k in (1, 2, 3):
                lo, hi = closed_form_roots(g0, k, h, G)
                m = VorticityModel.constant(g0)
                neg = [bp.lam for bp in find_bifurcation(m, h, L, k, (-30.0, -0.05), G)]
                pos = [bp.lam for bp in find_bifurcation(m, h, L, k, (0.05, 30.0), G)]
                worst = max(worst, abs(neg[0] - lo) / abs(lo), abs(pos[0] - hi) / abs(hi))
    exact = math.sqrt(G * math.tanh(1.0))
    z_pos = find_bifurcation(VorticityModel.zero(), 1.0, L, 1, (0.1, 10.0), G)[0].lam
    z_neg = find_bifurcation(VorticityModel.zero(), 1.0, L, 1, (-10.0, -0.1), G)[0].lam
    zero_err = max(abs(z_pos - exact), abs(z_neg + exact)) / exact
    report(request, 3, "bifurcation roots", worst <= 1e-8 and zero_err <= 1e-8,
           f"constant worst rel {worst:.2e}, irrotational +-sqrt(g tanh 1) rel {zero_err:.2e}")


def test_ac04_trivial_residual(request):
    disc = Discretization(L, 1.0, 32, 256)
    worst = 0.0
    for m in MODELS.values():
        pr = Problem(m, disc)
        for lam in (-3.0, -1.0, -0.5, 0.5, 1.0, 3.0):
            worst = max(worst, float(np.max(np.abs(residual(pr.trivial(lam))))))
    report(request, 4, "trivial residual", worst <= 1e-11, f"24 cases, max |F| {worst:.2e}")


def test_ac05_linearization(request):
    rng = np.random.default_rng(2024)
    disc = Discretization(L, 1.0, 12, 64)
    worst_fd = 0.0
    for (name, lam) in (("zero", 2.0), ("constant", -1.2), ("affine", 1.4), ("sine", -2.5)):
        model = MODELS[name]
        pr = Problem(model, disc)
        lin = linearize_trivial(model, lam, disc)
        base = pr.trivial(lam).packed()
        for _ in range(20):
            v = rng.standard_normal(disc.size)
            v[1:1 + disc.N] /= (1 + np.arange(1, disc.N + 1)) ** 2
            e = 1e-5
            fd = (residual(State.from_packed(pr, lam, base + e * v))
                  - residual(State.from_packed(pr, lam, base - e * v))) / (2 * e)
            worst_fd = max(worst_fd, float(np.max(np.abs(lin(v) - fd)) / np.max(np.abs(fd))))
    worst_k = 0.0
    kdisc = Discretization(L, 1.0, 16, 128)
    for name, m in MODELS.items():
        lam0 = find_bifurcation(m, 1.0, L, 1, BRACKETS[name])[0].lam
        t = bifurcation_tangent(m, lam0, 1, kdisc)
        out = linearize_trivial(m, lam0, kdisc)(t[1:])
        worst_k = max(worst_k, float(np.max(np.abs(out)) / np.max(np.abs(t))))
    report(request, 5, "linearization consistency", worst_fd <= 1e-6 and worst_k <= 1e-6,
           f"80 directions worst rel {worst_fd:.2e}, kernel residual {worst_k:.2e}")


def _local_point(model, lam0, N, M, s):
    disc = Discretization(L, 1.0, N, M)
    pr = Problem(model, disc)
    W = arclength_weights(disc)
    t = bifurcation_tangent(model, lam0, 1, disc)
    t /= weighted_norm(t, W)
    X0 = pr.trivial(lam0).vector()
    res = newton_correct(State.from_vector(pr, X0 + s * t), Constraint.arclength(X0, t, s, W))
    return res, X0, t


def test_ac06_local_branch(request):
    s = 0.01
    ok = True
    parts = []
    for name, model in MODELS.items():
        lam0 = find_bifurcation(model, 1.0, L, 1, BRACKETS[name])[0].lam
        res, _, _ = _local_point(model, lam0, 32, 128, s)
        gap = flattened_bernoulli_gap(res.state)
        amp = float(res.state.w_modes[0])
        errs = []
        for N, M in ((16, 64), (32, 128), (64, 256)):
            disc = Discretization(L, 1.0, N, M)
            pr = Problem(model, disc)
            X = pr.trivial(lam0).vector()
            X[2] = amp
            fixed = newton_correct(State.from_vector(pr, X), Constraint.fixed_amplitude(disc, 1, amp))
            errs.append(max(physical_oracle(fixed.state).residuals().values()))
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        floor = max(errs) <= 1e-9
        shrink = all(r >= 8.0 for r in ratios)
        good = res.iterations <= 10 and gap <= 1e-10 and (shrink or floor)
        ok &= good
        how = "at roundoff floor" if floor and not shrink else "ratios " + "/".join(f"{r:.1f}" for r in ratios)
        parts.append(f"{name} it={res.iterations} gap={gap:.1e} oracle {errs[-1]:.1e} {how}")
    report(request, 6, "local branch", ok, "; ".join(parts))


def test_ac07_asymptotic_expansion(request):
    s = 0.02
    ratios = []
    for name, model in MODELS.items():
        lam0 = find_bifurcation(model, 1.0, L, 1, BRACKETS[name])[0].lam
        for b in (1, -1):
            err = []
            for ss in (s, s / 2):
                disc = Discretization(L, 1.0, 16, 64)
                pr = Problem(model, disc)
                W = arclength_weights(disc)
                t = b * bifurcation_tangent(model, lam0, 1, disc)
                t /= weighted_norm(t, W)
                X0 = pr.trivial(lam0).vector()
                res = newton_correct(State.from_vector(pr, X0 + ss * t), Constraint.arclength(X0, t, ss, W))
                err.append(np.linalg.norm(res.state.vector() - X0 - ss * t))
            ratios.append(err[0] / err[1])
    report(request, 7, "asymptotic expansion", min(ratios) >= 3.5,
           f"8 half-branches, ratios in [{min(ratios):.3f}, {max(ratios):.3f}]")


def test_ac08_irrotational_continuation(request):
    lam0 = find_bifurcation(VorticityModel.zero(), 1.0, L, 1, (0.3, 8))[0].lam
    cfg = ContinuationConfig(resolution=(64, 256), max_points=200, initial_step=0.005, max_step=0.01,
                             height_margin_min=0.5, height_margin_relative=True)
    t0 = time.perf_counter()
    res = continue_branch(VorticityModel.zero(), lam0, 1, cfg)
    dt = time.perf_counter() - t0
    margins = [p.monitors["greatest_height_margin"] for p in res.points]
    hs = [p.monitors["wave_height"] for p in res.points]
    first = hs[:20]
    increasing = len(first) == 20 and all(b > a for a, b in zip(first, first[1:]))
    ok = res.verdict in ALTERNATIVES and min(margins) > 0 and increasing and dt < 600
    report(request, 8, "irrotational continuation", ok,
           f"verdict {res.verdict}, {len(res.points)} points, min margin {min(margins):.3e}, "
           f"final height {hs[-1]:.4f}, {dt:.1f} s")


def test_ac09_nodal_suite(request):
    cfg = ContinuationConfig(resolution=(32, 128), max_points=60, initial_step=0.01, max_step=0.02,
                             height_margin_min=0.5, height_margin_relative=True)
    model = VorticityModel.constant(1.5)
    parts, ok = [], True
    lam_up = find_bifurcation(model, 1.0, L, 1, (-8, -0.3))[0].lam
    lam_down = find_bifurcation(model, 1.0, L, 1, (0.3, 8))[0].lam
    for b in (1, -1):
        res = continue_branch(model, lam_up, 1, cfg, branch=b)
        nod = all(nodal_check(p.state, lam_up, b).nodal_ok for p in res.points)
        fpos = all(f_field(p.state, b)[1] == "positive" for p in res.points)
        ok &= nod and fpos and len(res.points) > 5
        parts.append(f"lam0={lam_up:.4f} branch {b:+d}: {len(res.points)} pts nodal {nod} f>0 {fpos}")
        res = continue_branch(model, lam_down, 1, cfg, branch=b)
        down = all(all(downstream_check(p.state, lam_down)) for p in res.points)
        ok &= down and len(res.points) > 5
        parts.append(f"lam0={lam_down:.4f} branch {b:+d}: {len(res.points)} pts downstream {down}")
    report(request, 9, "nodal suite", ok, "; ".join(parts))


def test_ac10_unit_oracles(request):
    errs = []
    for M in (16, 32, 64):
        c = math.pi**2 + 4.0
        y = strip_y(1.0, M)
        cos = np.zeros((5, M + 1))
        cos[2] = -c * np.sin(math.pi * y)
        u = poisson_strip(StripField.even(L, 1.0, cos))
        errs.append(float(np.max(np.abs(u.cos[2] - np.sin(math.pi * y)))))
    order = math.log2(errs[1] / errs[2])
    rng = np.random.default_rng(7)
    rt = 0.0
    trace_exact = True
    for h in (0.3, 1.0, 3.0):
        a = rng.standard_normal(33)
        a[0] = 0.0
        u = PeriodicScalar.even(L, a)
        back = spectral.hilbert_strip(spectral.hilbert_strip_inverse(u, h), h)
        rt = max(rt, float(np.max(np.abs(back.a - a))))
        V = spectral.harmonic_extension(u, h, 32)
        expect = a.copy()
        expect[0] = h
        trace_exact &= np.array_equal(V.trace("top").a, expect) and not np.any(V.trace("bottom").a)
    ok = 3.8 <= order <= 4.3 and rt <= 1e-13 and trace_exact
    report(request, 10, "spectral/elliptic oracles", ok,
           f"Poisson order {order:.2f}, Hilbert round trip {rt:.1e}, extension traces exact {trace_exact}")


def test_ac11_determinism(request, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("vorticity: {kind: affine, a: -2.0, b: 1.0}\nnumerics: {N: 32, M: 64}\n"
                   "laminar: {lambda_min: 0.5, lambda_max: 3.0, count: 5}\n"
                   "dispersion: {k: [1, 2], lambdas: [1.0, 2.0], bracket: [0.3, 8.0]}\n"
                   "bifurcate: {k: [1, 2], bracket: [0.3, 8.0]}\n"
                   "continue: {k: 1, bracket: [0.3, 8.0], max_points: 6, snapshot_every: 3}\n")
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        for cmd in ("laminar", "dispersion", "bifurcate", "continue"):
            assert cli.main([cmd, "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out)
    csvs = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in csvs)
    report(request, 11, "determinism", same and len(csvs) >= 5, f"{len(csvs)} CSV files byte-identical {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
