"""Structural properties of computed waves: nodal pattern, the f-field,
downstream flow, stagnation points and surface geometry."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import spectral
from .elliptic import derivative_y, gradient_V_grid
from .operator import State
from .spectral import StripField, collocation_size, to_grid

MARGIN = 1e-10


@dataclass
class NodalReport:
    bed_clear: bool
    monotone_crest_to_trough: bool
    crest_curvature_sign: int
    trough_curvature_sign: int
    mapped_half_period_ok: bool
    endpoint_Ux_positive: bool
    flat: bool
    margins: dict
    resolution: int

    @property
    def nodal_ok(self) -> bool:
        return not self.failures()

    def failures(self) -> list[str]:
        out = [k for k in ("bed_clear", "monotone_crest_to_trough", "mapped_half_period_ok",
                           "endpoint_Ux_positive") if not getattr(self, k)]
        if self.crest_curvature_sign >= 0:
            out.append("crest_curvature")
        if self.trough_curvature_sign <= 0:
            out.append("trough_curvature")
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nodal_ok"] = self.nodal_ok
        return d


@dataclass
class FField:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    verdict: str
    worst: float

    def as_strip_field(self, L: float, h: float, N: int) -> StripField:
        """Odd-in-x StripField interpolating the full-period samples."""
        full = np.concatenate([self.values, -self.values[:, -2:0:-1]], axis=1)
        return StripField.from_samples(full, L, h, N, parity="odd")


@dataclass
class WaveReport:
    nodal: NodalReport
    f_positive: bool
    unidirectional: bool
    overhang_free: bool
    self_intersection: list | None
    geometry: dict
    margins: dict = field(default_factory=dict)
    resolution: tuple = ()

    def to_dict(self) -> dict:
        return {
            "nodal": self.nodal.to_dict(),
            "f_positive": bool(self.f_positive),
            "unidirectional": bool(self.unidirectional),
            "overhang_free": bool(self.overhang_free),
            "self_intersection": self.self_intersection,
            "geometry": self.geometry,
            "margins": self.margins,
            "resolution": list(self.resolution),
        }


def _half_grid(L: float, n: int) -> np.ndarray:
    return 0.5 * L * np.arange(n + 1) / n


def _surface_series(state: State, x: np.ndarray):
    """w, w', w'', 1 + C w' and x + C w at the points x."""
    d = state.disc
    k = d.k[1:]
    a = state.w_modes
    c = d.coth[1:]
    kx = np.outer(x, k)
    cs, sn = np.cos(kx), np.sin(kx)
    w = cs @ a
    wp = -sn @ (k * a)
    wpp = -cs @ (k * k * a)
    ux = 1.0 + cs @ (c * k * a)
    U = x + sn @ (c * a)
    return w, wp, wpp, ux, U


def nodal_check(state: State, lam0: float | None = None, branch: int = 1, margin: float = MARGIN,
                n: int | None = None) -> NodalReport:
    """Nodal pattern on the half period [0, L/2].

    With eps = -sign(lam0) * branch the expected pattern is eps w' < 0 on
    (0, L/2), eps w''(0) < 0 and eps w''(L/2) > 0.
    """
    d = state.disc
    lam0 = state.lam if lam0 is None else lam0
    n = n or max(256, collocation_size(d.N))
    x = _half_grid(d.L, n)
    w, wp, wpp, ux, U = _surface_series(state, x)
    eps = -np.sign(lam0) * branch
    inner = slice(1, -1)
    flat = bool(np.max(np.abs(wp)) <= margin)
    mono = float(np.max(eps * wp[inner]))
    m = {
        "bed": float(np.min(w) + d.h),
        "monotone": -mono,
        "crest_curvature": float(-eps * wpp[0]),
        "trough_curvature": float(eps * wpp[-1]),
        "mapped_lower": float(np.min(U[inner])),
        "mapped_upper": float(np.min(0.5 * d.L - U[inner])),
        "endpoint_Ux": float(min(ux[0], ux[-1])),
    }

    def sgn(v):
        return 1 if v > margin else (-1 if v < -margin else 0)

    return NodalReport(
        bed_clear=m["bed"] > margin,
        monotone_crest_to_trough=(not flat) and -mono > 0.0,
        crest_curvature_sign=sgn(eps * wpp[0]),
        trough_curvature_sign=sgn(eps * wpp[-1]),
        mapped_half_period_ok=min(m["mapped_lower"], m["mapped_upper"]) > 0.0,
        endpoint_Ux_positive=m["endpoint_Ux"] > margin,
        flat=flat,
        margins=m,
        resolution=n,
    )


def _field_gradients(state: State, P: int):
    """psi_x, psi_y (flattened) and V_x, V_y on the (M+1) x P grid."""
    d = state.disc
    phi = state.phi_modes
    k = d.k
    phi_x = to_grid(np.zeros_like(phi.T), (-k[:, None] * phi).T, P)
    phi_y = to_grid(derivative_y(phi, d.h).T, None, P)
    psi_y = phi_y + state.laminar.psi_y[:, None]
    Vx, Vy = gradient_V_grid(state.w_modes, d.L, d.h, d.M, P)
    return phi_x, psi_y, Vx, Vy


def _conformal_points(state: State, P: int):
    d = state.disc
    x = d.L * np.arange(P) / P
    S, _ = spectral.extension_profiles(d.N, d.L, d.h, d.y)
    y = d.y
    Cp = np.cosh(np.outer(d.k[1:], y + d.h)) / np.sinh(d.k[1:] * d.h)[:, None]
    a = state.w_modes
    U = x[None, :] + to_grid(np.zeros((y.size, d.N + 1)), np.vstack([np.zeros(y.size), a[:, None] * Cp]).T, P)
    V = (y + d.h)[:, None] + to_grid(np.vstack([np.zeros(y.size), a[:, None] * S[1:]]).T, None, P)
    return U, V


def f_field(state: State, branch: int = 1, margin: float = MARGIN, min_K: float = 1e-8,
            P: int | None = None) -> tuple[FField, str]:
    """f = (V_x psi_y - V_y phi_x) / |grad V|^2 sampled on the half strip.

    Positivity of branch * f is tested on (0, L/2) x (-h, 0].
    """
    d = state.disc
    ev = state.evaluation
    if ev.margins["min_K"] < min_K:
        raise ValueError(f"min K = {ev.margins['min_K']:.3e} below {min_K}; f is not defined")
    P = P or max(256, collocation_size(d.N))
    P += P % 2
    phi_x, psi_y, Vx, Vy = _field_gradients(state, P)
    f = (Vx * psi_y - Vy * phi_x) / (Vx**2 + Vy**2)
    half = P // 2 + 1
    f = f[:, :half]
    f[:, 0] = 0.0
    f[:, -1] = 0.0
    U, V = _conformal_points(state, P)
    x = d.L * np.arange(half) / P
    inner = branch * f[1:, 1:-1]
    worst = float(np.min(inner)) if inner.size else 0.0
    if float(np.max(np.abs(f))) <= margin:
        verdict = "degenerate-flat"
    elif worst > 0.0:
        verdict = "positive"
    else:
        verdict = "not positive"
    ff = FField(x, d.y.copy(), f, U[:, :half], V[:, :half], verdict, worst)
    return ff, verdict


def f_surface_identity(state: State) -> tuple[np.ndarray, np.ndarray]:
    """(direct f at y = 0, sign(lam) w' sqrt(2q + lam^2 - 2gw)/K) on the collocation grid."""
    d = state.disc
    P = max(256, collocation_size(d.N))
    P += P % 2
    phi_x, psi_y, Vx, Vy = _field_gradients(state, P)
    direct = (Vx[-1] * psi_y[-1] - Vy[-1] * phi_x[-1]) / (Vx[-1] ** 2 + Vy[-1] ** 2)
    x = d.L * np.arange(P) / P
    w, wp, _, ux, _ = _surface_series(state, x)
    K = np.hypot(wp, ux)
    ident = np.sign(state.lam) * wp * np.sqrt(2 * state.q + state.lam**2 - 2 * d.g * w) / K
    return direct, ident


def downstream_check(state: State, lam0: float | None = None, margin: float = 0.0,
                     P: int | None = None) -> tuple[bool, bool]:
    """(unidirectional, overhang_free) on the closed strip grid."""
    uni, over = downstream_margins(state, lam0, P)
    return uni > margin, over > margin


def downstream_margins(state: State, lam0: float | None = None, P: int | None = None) -> tuple[float, float]:
    d = state.disc
    lam0 = state.lam if lam0 is None else lam0
    P = P or max(256, collocation_size(d.N))
    phi_x, psi_y, Vx, Vy = _field_gradients(state, P)
    u = (Vx * phi_x + Vy * psi_y) / (Vx**2 + Vy**2)
    uni = float(np.min(np.sign(lam0) * u))
    x = d.L * np.arange(P) / P
    _, _, _, ux, _ = _surface_series(state, x)
    return uni, float(np.min(ux))


def stagnation_scan(state: State, threshold: float | None = None, P: int | None = None) -> list[tuple]:
    """Grid points (x, y, |grad psi|) with flattened |grad(phi + psi_lam)| < threshold."""
    d = state.disc
    if threshold is None:
        threshold = 1e-2 * abs(state.lam)
    if threshold <= 0:
        return []
    P = P or collocation_size(d.N)
    phi_x, psi_y, _, _ = _field_gradients(state, P)
    mag = np.hypot(phi_x, psi_y)
    iy, ix = np.nonzero(mag < threshold)
    x = d.L * np.arange(P) / P
    return [(float(x[j]), float(d.y[i]), float(mag[i, j])) for i, j in zip(iy, ix)]


def self_intersection_location(state: State, n: int = 512) -> list | None:
    """Approximate (X, Y) of the first crossing of the surface curve, or None."""
    w = state.w
    if not spectral.self_intersects(w, state.disc.h, n):
        return None
    pts = spectral.surface_curve(w, state.disc.h, n)
    L = state.disc.L
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            p1, p2 = pts[i], pts[(i + 1) % n] + (np.array([L, 0.0]) if i == n - 1 else 0.0)
            for shift in (-L, 0.0, L):
                q1 = pts[j] + np.array([shift, 0.0])
                q2 = (pts[(j + 1) % n] + np.array([L if j == n - 1 else 0.0, 0.0])) + np.array([shift, 0.0])
                if spectral._segments_cross(p1, p2, q1, q2):
                    return [float(0.5 * (p1[0] + q1[0])), float(0.5 * (p1[1] + q1[1]))]
    return None


def geometry(state: State, n: int = 1024) -> dict:
    d = state.disc
    x = d.L * np.arange(n) / n
    w, wp, _, ux, U = _surface_series(state, x)
    i_c, i_t = int(np.argmax(w)), int(np.argmin(w))
    height = float(w[i_c] - w[i_t])
    return {
        "amplitude": 0.5 * height,
        "wave_height": height,
        "crest": [float(U[i_c]), float(w[i_c])],
        "trough": [float(U[i_t]), float(w[i_t])],
        "steepness": height / d.L,
        "max_surface_angle_deg": float(np.degrees(np.max(np.abs(np.arctan2(wp, ux))))),
        "resolution": n,
    }


def wave_report(state: State, lam0: float | None = None, branch: int = 1) -> WaveReport:
    lam0 = state.lam if lam0 is None else lam0
    nod = nodal_check(state, lam0, branch)
    try:
        ff, verdict = f_field(state, branch)
        f_pos, f_worst = verdict == "positive", ff.worst
    except ValueError:
        f_pos, f_worst = False, math.nan
    uni, over = downstream_margins(state, lam0)
    d = state.disc
    return WaveReport(
        nodal=nod,
        f_positive=f_pos,
        unidirectional=uni > 0,
        overhang_free=over > 0,
        self_intersection=self_intersection_location(state),
        geometry=geometry(state),
        margins={"f": f_worst, "unidirectional": uni, "overhang": over},
        resolution=(d.N, d.M),
    )
