"""Poisson solves on the periodic strip and the vorticity-coupled field A.

Each x-mode k solves u'' - (k nu)^2 u = r on [-h, 0] with u = 0 at both ends,
discretized by the fourth-order compact (Numerov) stencil

    (u_{j+1} - 2u_j + u_{j-1}) / dy^2 = (f_{j+1} + 10 f_j + f_{j-1}) / 12,
    f = (k nu)^2 u + r,

which gives one symmetric tridiagonal system per mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .laminar import LaminarFlow
from .spectral import (PeriodicScalar, StripField, collocation_size, extension_profiles, from_grid,
                       strip_y, to_grid)
from .vorticity import VorticityModel


@dataclass(frozen=True)
class PoissonProblem:
    rhs: StripField

    def __post_init__(self):
        if not (np.all(np.isfinite(self.rhs.cos)) and np.all(np.isfinite(self.rhs.sin))):
            raise ValueError("Poisson right-hand side must be finite")

    def solve(self) -> StripField:
        return poisson_strip(self.rhs)


@lru_cache(maxsize=32)
def _numerov_bands(N: int, M: int, L: float, h: float):
    dy = h / M
    k2 = (2.0 * np.pi / L * np.arange(N + 1)) ** 2
    s = (dy * dy * k2 / 12.0)[:, None] * np.ones((1, M - 1))
    off = 1.0 - s
    diag = -(2.0 + 10.0 * s)
    for a in (off, diag):
        a.flags.writeable = False
    return off, diag


def numerov_rhs(r: np.ndarray, h: float) -> np.ndarray:
    """Right-hand side (dy^2/12)(r_{j-1} + 10 r_j + r_{j+1}) at interior points."""
    M = r.shape[-1] - 1
    dy = h / M
    return dy * dy / 12.0 * (r[..., :-2] + 10.0 * r[..., 1:-1] + r[..., 2:])


def solve_modes(r: np.ndarray, L: float, h: float, backend=None) -> np.ndarray:
    """Solve the per-mode Dirichlet problems for profiles r of shape (N+1, M+1)."""
    N, M = r.shape[0] - 1, r.shape[1] - 1
    off, diag = _numerov_bands(N, M, L, h)
    u = np.zeros_like(r)
    u[:, 1:-1] = kernels.tridiag_solve(off, diag, off, numerov_rhs(r, h), backend)
    return u


def apply_modes(u: np.ndarray, L: float, h: float) -> np.ndarray:
    """Discrete operator of ``solve_modes`` applied to u with zero traces (interior rows)."""
    N, M = u.shape[0] - 1, u.shape[1] - 1
    off, diag = _numerov_bands(N, M, L, h)
    return off * (u[:, :-2] + u[:, 2:]) + diag * u[:, 1:-1]


def poisson_strip(rhs: StripField) -> StripField:
    """Solve Delta u = rhs with u = 0 on y = 0 and y = -h."""
    cos = solve_modes(rhs.cos, rhs.L, rhs.h)
    sin = solve_modes(rhs.sin, rhs.L, rhs.h) if np.any(rhs.sin) else np.zeros_like(rhs.sin)
    return StripField(rhs.L, rhs.h, cos, sin, rhs.parity)


def normal_derivative_top(u: np.ndarray, h: float) -> np.ndarray:
    """One-sided fourth-order d/dy at y = 0 along the last axis."""
    M = u.shape[-1] - 1
    dy = h / M
    return (25.0 * u[..., -1] - 48.0 * u[..., -2] + 36.0 * u[..., -3]
            - 16.0 * u[..., -4] + 3.0 * u[..., -5]) / (12.0 * dy)


def derivative_y(u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order d/dy along the last axis: centred inside, one-sided near the ends."""
    M = u.shape[-1] - 1
    dy = h / M
    d = np.empty_like(u)
    d[..., 2:-2] = (u[..., :-4] - 8.0 * u[..., 1:-3] + 8.0 * u[..., 3:-1] - u[..., 4:]) / (12.0 * dy)
    d[..., 0] = (-25.0 * u[..., 0] + 48.0 * u[..., 1] - 36.0 * u[..., 2] + 16.0 * u[..., 3] - 3.0 * u[..., 4]) / (12.0 * dy)
    d[..., 1] = (-3.0 * u[..., 0] - 10.0 * u[..., 1] + 18.0 * u[..., 2] - 6.0 * u[..., 3] + u[..., 4]) / (12.0 * dy)
    d[..., -1] = normal_derivative_top(u, h)
    d[..., -2] = (3.0 * u[..., -1] + 10.0 * u[..., -2] - 18.0 * u[..., -3] + 6.0 * u[..., -4] - u[..., -5]) / (12.0 * dy)
    return d


def second_derivative_y(u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order d^2/dy^2 along the last axis."""
    M = u.shape[-1] - 1
    dy2 = (h / M) ** 2
    d = np.empty_like(u)
    d[..., 2:-2] = (-u[..., :-4] + 16.0 * u[..., 1:-3] - 30.0 * u[..., 2:-2]
                    + 16.0 * u[..., 3:-1] - u[..., 4:]) / (12.0 * dy2)
    cb = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
    cn = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0
    ends = (0, 1, M, M - 1)
    for i in ends:
        d[..., i] = 0.0
    for t in range(6):
        d[..., 0] += cb[t] * u[..., t] / dy2
        d[..., 1] += cn[t] * u[..., t] / dy2
        d[..., M] += cb[t] * u[..., M - t] / dy2
        d[..., M - 1] += cn[t] * u[..., M - t] / dy2
    return d


def surface_normal_derivative(A: StripField) -> PeriodicScalar:
    """S d_y A: one-sided fourth-order differencing of each mode profile at y = 0."""
    return PeriodicScalar(A.L, normal_derivative_top(A.cos, A.h), normal_derivative_top(A.sin, A.h),
                          A.parity)


def gradient_V_grid(w_modes: np.ndarray, L: float, h: float, M: int, P: int):
    """V_x and V_y on the (M+1) x P grid for w = sum_{k>=1} w_k cos(k nu x)."""
    N = w_modes.size
    y = strip_y(h, M)
    S, D = extension_profiles(N, L, h, y)
    nu = 2.0 * np.pi / L
    k = nu * np.arange(N + 1)
    wa = np.concatenate([[0.0], w_modes])
    vx_b = -(k * wa)[:, None] * S
    vy_a = wa[:, None] * D
    vy_a[0] = 1.0
    zeros = np.zeros_like(S)
    Vx = to_grid(zeros.T, vx_b.T, P)
    Vy = to_grid(vy_a.T, None, P)
    return Vx, Vy


def field_rhs(model: VorticityModel, psi_lam: np.ndarray, grad2: np.ndarray,
              phi_grid: np.ndarray | None) -> np.ndarray:
    """-gamma(phi + psi_lam) |grad V|^2 + gamma(psi_lam) on the strip grid."""
    g_lam = model.gamma(psi_lam)[:, None]
    if phi_grid is None or model.linear_in_field:
        return g_lam * (1.0 - grad2)
    return -model.gamma(phi_grid + psi_lam[:, None]) * grad2 + g_lam


def compute_A(model: VorticityModel, laminar: LaminarFlow, w: PeriodicScalar, phi: StripField) -> StripField:
    """Solve Delta A = -gamma(phi + psi_lam)|grad V|^2 + gamma(psi_lam), A = 0 on both boundaries."""
    N, M = phi.N, phi.M
    if laminar.M != M:
        raise ValueError("laminar profile and field use different y-grids")
    if model.is_zero:
        return StripField.zeros(phi.L, phi.h, N, M)
    P = collocation_size(N)
    wm = w.resized(N).a[1:]
    Vx, Vy = gradient_V_grid(wm, phi.L, phi.h, M, P)
    rhs = field_rhs(model, laminar.psi, Vx * Vx + Vy * Vy, phi.samples(P))
    a, _ = from_grid(rhs, N)
    return StripField.even(phi.L, phi.h, solve_modes(a.T, phi.L, phi.h))
