"""Laminar flows, the Sturm-Liouville function beta, and the dispersion relation.

A laminar flow with surface velocity ``lam`` solves psi'' = -gamma(psi) on
[-h, 0] with psi(0) = 0, psi'(0) = lam.  For a spectral parameter ``mu``
the function beta solves

    beta'' + (gamma'(psi) + mu) beta = 0,   beta(-h) = 0,  beta(0) = 1,

and the dispersion relation reads d(mu, lam) = beta'(0) + gamma(0)/lam - g/lam**2.
Local bifurcation from the laminar family happens at roots of
d(-(k nu)**2, lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .spectral import strip_y
from .vorticity import VorticityModel

G = 9.81

# Target value of kappa * dy for the Runge-Kutta step, where kappa**2 bounds
# the potential |gamma'| + |mu|.  Keeps the relative shooting error near 1e-10.
KAPPA_STEP = 0.01
SPECTRUM_TOL = 1e-10


class SpectrumAssumptionError(ArithmeticError):
    """The laminar flow has zero in the Dirichlet spectrum of -d^2/dy^2 - gamma'(psi)."""


class IntegrationError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class LaminarFlow:
    """Laminar profile on the y-grid plus the fine half-step nodes used for shooting."""

    model: VorticityModel
    lam: float
    h: float
    y: np.ndarray
    psi: np.ndarray
    psi_y: np.ndarray
    dpsi: np.ndarray
    dpsi_y: np.ndarray
    substeps: int
    fine: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.y.size - 1

    @property
    def m(self) -> float:
        """Relative mass flux m(lam) = -psi(-h)."""
        return float(-self.psi[0])

    @property
    def m_prime(self) -> float:
        return float(-self.dpsi[0])

    def critical_layer_count(self) -> int:
        """Number of sign changes of psi_y on the grid."""
        s = np.sign(self.psi_y)
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True, eq=False)
class DispersionResult:
    mu: float
    lam: float
    d: float
    d_lambda: float
    beta_y0: float
    in_dirichlet_spectrum: bool
    y: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    dbeta: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class BifurcationPoint:
    lam: float
    k: int
    d_lambda: float
    multiplicity: int
    kernel_modes: tuple[int, ...]


def _lipschitz(model: VorticityModel) -> float:
    if model.lipschitz_bound is not None:
        return float(model.lipschitz_bound)
    return abs(float(model.dgamma(0.0))) + 1.0


def required_substeps(model: VorticityModel, h: float, M: int, mu: float = 0.0) -> int:
    kappa = math.sqrt(abs(mu) + _lipschitz(model))
    return max(1, math.ceil(kappa * h / (M * KAPPA_STEP)))


def solve_laminar(model: VorticityModel, lam: float, h: float, M: int = 512,
                  substeps: int | None = None) -> LaminarFlow:
    """Integrate the laminar Cauchy problem and its lambda-variation from y=0 to y=-h."""
    if not math.isfinite(lam):
        raise ValueError("lambda must be finite")
    if M < 16:
        raise ValueError("grid resolution must be at least 16 points")
    if substeps is None:
        substeps = required_substeps(model, h, M)
    # Half-step nodes so that shooting with step h/(M*substeps) sees midpoints.
    nfine = 2 * M * substeps
    fine = kernels.laminar_rk4(model, lam, h, nfine)
    bad = ~np.all(np.isfinite(fine), axis=1)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise IntegrationError(f"laminar integration failed at y = {-h * j / nfine:.6g}")
    grid = fine[::2 * substeps][::-1]
    return LaminarFlow(model, float(lam), float(h), strip_y(h, M), grid[:, 0].copy(),
                       grid[:, 1].copy(), grid[:, 2].copy(), grid[:, 3].copy(), substeps, fine)


def solve_beta(model: VorticityModel, lam: float, mu: float, h: float,
               laminar: LaminarFlow | None = None, g: float = G, M: int | None = None) -> DispersionResult:
    """Shoot beta from y=-h with unit slope, rescale, and evaluate d and d_lambda."""
    if laminar is None:
        M = 512 if M is None else M
        laminar = solve_laminar(model, lam, h, M, required_substeps(model, h, M, mu))
    elif abs(laminar.lam - lam) > 0 or abs(laminar.h - h) > 0:
        raise ValueError("laminar flow does not match (lambda, h)")
    M = laminar.M
    need = required_substeps(model, h, M, mu)
    if need > laminar.substeps:
        laminar = solve_laminar(model, lam, h, M, need)
    ns = laminar.substeps
    shot = kernels.beta_rk4(model, mu, h, M * ns, laminar.fine[:, 0], laminar.fine[:, 2])
    if not np.all(np.isfinite(shot)):
        raise IntegrationError("beta shooting produced non-finite values")
    shot = shot[::ns]
    z, zy, zeta, zeta_y = shot.T
    z0 = z[-1]
    y = laminar.y
    gam0 = float(model.gamma(0.0))
    if abs(z0) < SPECTRUM_TOL * np.max(np.abs(z)):
        return DispersionResult(float(mu), float(lam), math.inf, math.nan, math.inf, True,
                                y, z.copy(), np.full_like(z, np.nan))
    beta = z / z0
    beta_y0 = zy[-1] / z0
    dbeta = (zeta - beta * zeta[-1]) / z0
    dbeta_y0 = (zeta_y[-1] - beta_y0 * zeta[-1]) / z0
    d = beta_y0 + gam0 / lam - g / lam**2
    d_lam = dbeta_y0 - gam0 / lam**2 + 2.0 * g / lam**3
    return DispersionResult(float(mu), float(lam), float(d), float(d_lam), float(beta_y0), False,
                            y, beta, dbeta)


def dispersion(model: VorticityModel, lam: float, mu: float, h: float, g: float = G,
               M: int = 512) -> DispersionResult:
    """d(mu, lam) and its lambda-derivative."""
    if lam == 0:
        raise ValueError("dispersion relation undefined at lambda = 0")
    return solve_beta(model, lam, mu, h, None, g, M)


def _dispersion_value(model, lam, mu, h, g, M):
    r = dispersion(model, lam, mu, h, g, M)
    scale = abs(r.beta_y0) + abs(float(model.gamma(0.0)) / lam) + g / lam**2
    return r.d, scale


def find_bifurcation(model: VorticityModel, h: float, L: float, k: int, bracket: tuple[float, float],
                     g: float = G, n_scan: int = 400, M: int = 512, K_max: int = 64,
                     bisection_steps: int = 60) -> list[BifurcationPoint]:
    """All roots of lam -> d(-(k nu)**2, lam) inside ``bracket``."""
    lo, hi = sorted(map(float, bracket))
    if lo <= 0.0 <= hi:
        raise ValueError("bracket must exclude lambda = 0")
    mu = -(2.0 * np.pi / L * k) ** 2
    lams = np.linspace(lo, hi, n_scan)
    vals = np.array([_dispersion_value(model, lam, mu, h, g, M)[0] for lam in lams])
    roots = []
    for i in range(n_scan - 1):
        a, b = lams[i], lams[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb > 0:
            continue
        for _ in range(bisection_steps):
            c = 0.5 * (a + b)
            if c == a or c == b:
                break
            fc = _dispersion_value(model, c, mu, h, g, M)[0]
            if not np.isfinite(fc):
                break
            if fa * fc <= 0:
                b, fb = c, fc
            else:
                a, fa = c, fc
        c = a if abs(fa) <= abs(fb) else b
        dc, scale = _dispersion_value(model, c, mu, h, g, M)
        # A sign change across a pole of d leaves |d| large after bisection.
        if np.isfinite(dc) and abs(dc) <= 1e-6 * scale:
            roots.append(c)
    if vals[-1] == 0.0:
        roots.append(lams[-1])
    out = []
    for lam in roots:
        r = dispersion(model, lam, mu, h, g, M)
        mult, modes = kernel_multiplicity(model, lam, h, L, K_max, g, M)
        out.append(BifurcationPoint(float(lam), int(k), r.d_lambda, mult, tuple(modes)))
    return out


def kernel_multiplicity(model: VorticityModel, lam: float, h: float, L: float, K_max: int = 64,
                        g: float = G, M: int = 512, tol: float = 1e-8) -> tuple[int, list[int]]:
    """Count k in 1..K_max with d(-(k nu)**2, lam) = 0 (relative tolerance ``tol``)."""
    if lam == 0:
        raise ValueError("kernel undefined at lambda = 0")
    lamflow = solve_laminar(model, lam, h, M)
    if solve_beta(model, lam, 0.0, h, lamflow, g).in_dirichlet_spectrum:
        raise SpectrumAssumptionError(
            f"zero is a Dirichlet eigenvalue of the laminar Sturm-Liouville operator at lambda={lam}")
    nu = 2.0 * np.pi / L
    gam0 = float(model.gamma(0.0))
    _, sup_d = model.derivative_range(float(np.min(lamflow.psi)), float(np.max(lamflow.psi)))
    modes = []
    for k in range(1, K_max + 1):
        mu = -(k * nu) ** 2
        r = solve_beta(model, lam, mu, h, lamflow, g)
        if r.in_dirichlet_spectrum:
            continue
        scale = abs(r.beta_y0) + abs(gam0 / lam) + g / lam**2
        if abs(r.d) <= tol * scale:
            modes.append(k)
        elif r.d > 0 and mu + sup_d < 0:
            # beta'(0) >= v(mu + sup gamma') grows with k, so d stays positive.
            lower = prufer_v(mu + sup_d, h) + gam0 / lam - g / lam**2
            if lower > tol * scale:
                break
    return len(modes), modes


def prufer_v(z: float, h: float) -> float:
    """v(z) = sqrt(-z) coth(h sqrt(-z)), continued analytically to z >= 0."""
    if z < 0:
        r = math.sqrt(-z)
        return r / math.tanh(h * r)
    if z == 0:
        return 1.0 / h
    r = math.sqrt(z)
    return r * math.cos(h * r) / math.sin(h * r)


@dataclass
class PruferReport:
    inf_dgamma: float
    sup_dgamma: float
    rows: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [r for r in self.rows if r["checked"] and not r["ok"]]

    @property
    def ok(self) -> bool:
        return not self.violations


def prufer_bounds_check(model: VorticityModel, lam: float, mus, h: float, g: float = G,
                        M: int = 512, rtol: float = 1e-8) -> PruferReport:
    """Check v(mu + sup gamma') <= beta'(0) <= v(mu + inf gamma') on the intervals I_j.

    The infimum and supremum of gamma' are taken over the range of the
    laminar profile, which is all the comparison argument uses.
    """
    lamflow = solve_laminar(model, lam, h, M)
    lo, hi = model.derivative_range(float(np.min(lamflow.psi)), float(np.max(lamflow.psi)))
    rep = PruferReport(lo, hi)
    c = (np.pi / h) ** 2
    for mu in np.atleast_1d(mus):
        mu = float(mu)
        j = None
        if mu + hi < c:
            j = 0
        else:
            jj = int(math.floor(math.sqrt(max(mu + lo, 0.0) / c)))
            if jj >= 1 and jj**2 * c < mu + lo and mu + hi < (jj + 1) ** 2 * c:
                j = jj
        row = {"mu": mu, "interval": j, "checked": j is not None}
        if j is not None:
            r = solve_beta(model, lam, mu, h, lamflow, g)
            lower, upper = prufer_v(mu + hi, h), prufer_v(mu + lo, h)
            slack = rtol * (1.0 + abs(r.beta_y0))
            row.update(beta_y0=r.beta_y0, lower=lower, upper=upper,
                       ok=bool(lower - slack <= r.beta_y0 <= upper + slack))
        else:
            row["ok"] = True
        rep.rows.append(row)
    return rep


# Closed forms for constant and affine vorticity ---------------------------------------------------


def closed_form_laminar(model: VorticityModel, lam: float, y) -> np.ndarray:
    """psi^lam(y) for constant or affine gamma."""
    y = np.asarray(y, dtype=float)
    if model.code == 0:
        return -model.params[0] * y * y / 2 + lam * y
    if model.code != 1:
        raise ValueError("closed forms exist only for constant and affine vorticity")
    a, b = model.params
    if a == 0:
        return -b * y * y / 2 + lam * y
    if a < 0:
        c = math.sqrt(-a)
        return lam / c * np.sinh(c * y) + b / a * (np.cosh(c * y) - 1.0)
    c = math.sqrt(a)
    return lam / c * np.sin(c * y) + b / a * (np.cos(c * y) - 1.0)


def closed_form_beta_y0(model: VorticityModel, l: float, h: float) -> float:
    """beta'(0) at mu = -l**2 for constant or affine gamma."""
    a = 0.0 if model.code == 0 else float(model.params[0])
    if model.code not in (0, 1):
        raise ValueError("closed forms exist only for constant and affine vorticity")
    z = a - l * l
    if z > 0:
        r = math.sqrt(z)
        return r / math.tan(r * h)
    if z == 0:
        return 1.0 / h
    r = math.sqrt(-z)
    return r / math.tanh(r * h)


def closed_form_dispersion(model: VorticityModel, l: float, lam: float, h: float, g: float = G) -> float:
    """d(-l**2, lam) = beta'(0) + gamma(0)/lam - g/lam**2."""
    return closed_form_beta_y0(model, l, h) + float(model.gamma(0.0)) / lam - g / lam**2


def closed_form_roots(gamma0: float, l: float, h: float, g: float = G) -> tuple[float, float]:
    """(lam^-, lam^+) solving l coth(l h) + gamma0/lam - g/lam^2 = 0."""
    t = math.tanh(l * h)
    c = -gamma0 * t / (2 * l)
    r = math.sqrt(g * t / l + gamma0**2 * t * t / (4 * l * l))
    return c - r, c + r
