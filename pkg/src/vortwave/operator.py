"""The nonlinear operator F = id - M on the flattened strip.

Unknowns are (lam, q, w, phi): the surface velocity of the underlying
laminar flow, the Bernoulli deviation, the even zero-mean surface profile
and the field perturbation (zero on both boundaries).  With

    A      solving  Delta A = -gamma(phi + psi_lam)|grad V|^2 + gamma(psi_lam),
    R      = |S d_y A + lam| / sqrt(2q + lam^2 - 2 g w),
    Theta  = C^{-1} P ln R,

the map M has components (q + <R cos Theta> - 1, d_x^{-1}(R sin Theta), A).
Solutions of F = 0 inside the admissible set are steady waves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import elliptic
from .elliptic import derivative_y, gradient_V_grid, normal_derivative_top, second_derivative_y, solve_modes
from .laminar import G, LaminarFlow, solve_laminar
from .spectral import (PeriodicScalar, StripField, collocation_size, coth_multiplier, extension_profiles,
                       from_grid, strip_y, tanh_multiplier, to_grid)
from .vorticity import VorticityModel


class AdmissibilityError(ArithmeticError):
    """The state lies outside the admissible set; carries the three margins."""

    def __init__(self, margins: dict):
        self.margins = dict(margins)
        text = ", ".join(f"{k}={v:.3e}" for k, v in self.margins.items())
        super().__init__(f"state is not admissible ({text})")


@dataclass(frozen=True)
class Discretization:
    """Physical constants and resolution: N Fourier modes, M y-intervals."""

    L: float
    h: float
    N: int
    M: int
    g: float = G

    def __post_init__(self):
        if not (self.L > 0 and self.h > 0 and self.g > 0):
            raise ValueError("L, h and g must be positive")
        if self.N < 1 or self.M < 8:
            raise ValueError("need N >= 1 and M >= 8")

    @property
    def nu(self) -> float:
        return 2.0 * math.pi / self.L

    @cached_property
    def P(self) -> int:
        return collocation_size(self.N)

    @cached_property
    def Pf(self) -> int:
        """Highest mode resolved on the collocation grid."""
        return self.P // 2 - 1

    @cached_property
    def x(self) -> np.ndarray:
        return self.L * np.arange(self.P) / self.P

    @cached_property
    def y(self) -> np.ndarray:
        return strip_y(self.h, self.M)

    @cached_property
    def k(self) -> np.ndarray:
        return self.nu * np.arange(self.N + 1)

    @cached_property
    def coth(self) -> np.ndarray:
        return coth_multiplier(self.N, self.L, self.h)

    @cached_property
    def tanh_full(self) -> np.ndarray:
        return tanh_multiplier(self.Pf, self.L, self.h)

    @cached_property
    def profiles(self):
        return extension_profiles(self.N, self.L, self.h, self.y)

    @property
    def size(self) -> int:
        """Dimension of the packed (q, w, phi) vector."""
        return 1 + self.N + (self.N + 1) * (self.M - 1)

    def refined(self, factor: int = 2) -> Discretization:
        return Discretization(self.L, self.h, factor * self.N, factor * self.M, self.g)


class Problem:
    """A vorticity model on a discretization, with a small cache of laminar flows."""

    def __init__(self, model: VorticityModel, disc: Discretization):
        self.model = model
        self.disc = disc
        self._laminar: dict[float, LaminarFlow] = {}

    def laminar(self, lam: float) -> LaminarFlow:
        lam = float(lam)
        flow = self._laminar.get(lam)
        if flow is None:
            if len(self._laminar) > 64:
                self._laminar.clear()
            flow = solve_laminar(self.model, lam, self.disc.h, self.disc.M)
            self._laminar[lam] = flow
        return flow

    def with_disc(self, disc: Discretization) -> Problem:
        return Problem(self.model, disc)

    def trivial(self, lam: float) -> State:
        d = self.disc
        return State(self, float(lam), 0.0, np.zeros(d.N), np.zeros((d.N + 1, d.M + 1)))


def pack(q: float, w: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """(q, w_1..w_N, interior phi values mode-major)."""
    return np.concatenate([[q], w, phi[:, 1:-1].ravel()])


def unpack(vec: np.ndarray, disc: Discretization):
    N, M = disc.N, disc.M
    if vec.size != disc.size:
        raise ValueError(f"packed vector has size {vec.size}, expected {disc.size}")
    phi = np.zeros((N + 1, M + 1))
    phi[:, 1:-1] = vec[1 + N:].reshape(N + 1, M - 1)
    return float(vec[0]), vec[1:1 + N].copy(), phi


@dataclass(frozen=True, eq=False)
class ResidualVector:
    F1: float
    F2: PeriodicScalar
    F3: StripField

    def packed(self) -> np.ndarray:
        return pack(self.F1, self.F2.a[1:], self.F3.cos)

    @classmethod
    def from_packed(cls, vec, disc: Discretization) -> ResidualVector:
        q, w, phi = unpack(np.asarray(vec, dtype=float), disc)
        return cls(q, PeriodicScalar.even(disc.L, np.concatenate([[0.0], w])),
                   StripField.even(disc.L, disc.h, phi))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.packed())))


class Evaluation:
    """All intermediate quantities of one evaluation of M at a state."""

    def __init__(self, problem: Problem, lam, q, w, phi, sign, keep_field=False):
        d = problem.disc
        model = problem.model
        N, M, P = d.N, d.M, d.P
        self.laminar = lam_flow = problem.laminar(lam)
        wa = np.concatenate([[0.0], w])
        self.w_grid = to_grid(wa, None, P)
        self.wp_grid = to_grid(np.zeros(N + 1), -d.k * wa, P)
        self.vy_surface = 1.0 + to_grid(d.coth * d.k * wa, None, P)
        self.K = np.hypot(self.vy_surface, self.wp_grid)
        self.Vx = self.Vy = None
        if model.is_zero:
            self.A = np.zeros((N + 1, M + 1))
            self.dA = np.zeros(N + 1)
        else:
            Vx, Vy = gradient_V_grid(w, d.L, d.h, M, P)
            phi_grid = None if model.linear_in_field else to_grid(phi.T, None, P)
            rhs = elliptic.field_rhs(model, lam_flow.psi, Vx * Vx + Vy * Vy, phi_grid)
            a, _ = from_grid(rhs, N)
            self.A = solve_modes(a.T, d.L, d.h)
            self.dA = normal_derivative_top(self.A, d.h)
            if keep_field:
                self.Vx, self.Vy = Vx, Vy
                self.phi_grid = phi_grid
        self.B = lam + to_grid(self.dA, None, P)
        self.den = 2.0 * q + lam * lam - 2.0 * d.g * self.w_grid
        self.margins = {
            "min_K": float(np.min(self.K)),
            "min_stagnation": float(np.min(sign * self.B)),
            "greatest_height_margin": float(0.5 * np.min(self.den)),
        }
        self.admissible = all(v > 0 for v in self.margins.values()) and np.all(np.isfinite(self.B))
        if not (self.margins["min_stagnation"] > 0 and self.margins["greatest_height_margin"] > 0):
            self.R = None
            return
        self.R = sign * self.B / np.sqrt(self.den)
        la, _ = from_grid(np.log(self.R), d.Pf)
        theta_b = -d.tanh_full * la
        theta_b[0] = 0.0
        self.Theta = to_grid(np.zeros_like(theta_b), theta_b, P)
        self.M1 = q + float(np.mean(self.R * np.cos(self.Theta))) - 1.0
        _, sb = from_grid(self.R * np.sin(self.Theta), N)
        self.M2 = np.zeros(N + 1)
        self.M2[1:] = -sb[1:] / d.k[1:]
        self.M3 = self.A


class State:
    """Solver unknown (lam, q, w, phi) on a problem; ``sign`` is the tracked sign of S d_y A + lam."""

    def __init__(self, problem: Problem, lam: float, q: float, w, phi, sign: int | None = None):
        d = problem.disc
        w = np.array(w, dtype=float).ravel()
        phi = np.array(phi, dtype=float)
        if w.shape != (d.N,):
            raise ValueError(f"w must hold modes 1..{d.N}")
        if phi.shape != (d.N + 1, d.M + 1):
            raise ValueError(f"phi must have shape {(d.N + 1, d.M + 1)}")
        if lam == 0 or not math.isfinite(lam):
            raise ValueError("lambda must be finite and nonzero")
        phi[:, 0] = 0.0
        phi[:, -1] = 0.0
        self.problem = problem
        self.lam = float(lam)
        self.q = float(q)
        self.w_modes = w
        self.phi_modes = phi
        self.sign = int(np.sign(lam)) if sign is None else int(sign)
        self._eval = None

    @classmethod
    def from_packed(cls, problem, lam, vec, sign=None) -> State:
        q, w, phi = unpack(np.asarray(vec, dtype=float), problem.disc)
        return cls(problem, lam, q, w, phi, sign)

    @classmethod
    def from_vector(cls, problem, X, sign=None) -> State:
        """From the continuation vector (lam, q, w, phi-interior)."""
        return cls.from_packed(problem, float(X[0]), X[1:], sign)

    @property
    def disc(self) -> Discretization:
        return self.problem.disc

    @property
    def model(self) -> VorticityModel:
        return self.problem.model

    @property
    def w(self) -> PeriodicScalar:
        return PeriodicScalar.even(self.disc.L, np.concatenate([[0.0], self.w_modes]))

    @property
    def phi(self) -> StripField:
        return StripField.even(self.disc.L, self.disc.h, self.phi_modes)

    @property
    def laminar(self) -> LaminarFlow:
        return self.problem.laminar(self.lam)

    def packed(self) -> np.ndarray:
        return pack(self.q, self.w_modes, self.phi_modes)

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.lam], self.packed()])

    @property
    def evaluation(self) -> Evaluation:
        if self._eval is None:
            self._eval = Evaluation(self.problem, self.lam, self.q, self.w_modes, self.phi_modes, self.sign)
        return self._eval

    @property
    def margins(self) -> dict:
        return self.evaluation.margins

    @property
    def admissible(self) -> bool:
        return self.evaluation.admissible

    def require_admissible(self):
        if not self.admissible:
            raise AdmissibilityError(self.margins)

    def with_disc(self, disc: Discretization) -> State:
        """Same state re-represented at another resolution (modes truncated or padded, phi interpolated in y)."""
        from scipy.interpolate import CubicSpline

        old = self.disc
        w = np.zeros(disc.N)
        n = min(disc.N, old.N)
        w[:n] = self.w_modes[:n]
        phi = np.zeros((disc.N + 1, disc.M + 1))
        prof = CubicSpline(old.y, self.phi_modes[: n + 1].T, axis=0)(strip_y(disc.h, disc.M)).T
        phi[: n + 1] = prof
        return State(self.problem.with_disc(disc), self.lam, self.q, w, phi, self.sign)


def bernoulli_R(state: State) -> PeriodicScalar:
    """R = |S d_y A + lam| / sqrt(2q + lam^2 - 2 g w) on the collocation grid."""
    state.require_admissible()
    return PeriodicScalar.from_samples(state.evaluation.R, state.disc.L, parity="even")


def apply_M(state: State) -> tuple[float, PeriodicScalar, StripField]:
    state.require_admissible()
    ev = state.evaluation
    d = state.disc
    return (ev.M1, PeriodicScalar.even(d.L, ev.M2), StripField.even(d.L, d.h, ev.M3))


def residual(state: State) -> np.ndarray:
    """Packed F = (q, w, phi) - M(state)."""
    ev = state.evaluation
    if ev.R is None:
        raise AdmissibilityError(ev.margins)
    F1 = state.q - ev.M1
    F2 = state.w_modes - ev.M2[1:]
    F3 = state.phi_modes[:, 1:-1] - ev.A[:, 1:-1]
    return np.concatenate([[F1], F2, F3.ravel()])


def apply_F(state: State) -> ResidualVector:
    state.require_admissible()
    return ResidualVector.from_packed(residual(state), state.disc)


def flattened_bernoulli_gap(state: State) -> float:
    """max |K(w) - R| on the collocation grid."""
    ev = state.evaluation
    if ev.R is None:
        return math.inf
    return float(np.max(np.abs(ev.K - ev.R)))


# Linearization at laminar states ---------------------------------------------------------------


class LinearMap:
    """Matrix-free linear map on packed vectors with optional dense assembly."""

    def __init__(self, apply, size):
        self._apply = apply
        self.size = size

    def __call__(self, v):
        return self._apply(np.asarray(v, dtype=float))

    def dense(self) -> np.ndarray:
        eye = np.eye(self.size)
        return np.column_stack([self(e) for e in eye])


def _V_modes(u_a: np.ndarray, S: np.ndarray) -> np.ndarray:
    """V[u] for zero-mean even boundary data with cosine coefficients u_a (k = 0..N)."""
    out = u_a[:, None] * S
    out[0] = 0.0
    return out


def linearize_trivial(model: VorticityModel, lam: float, disc: Discretization,
                      laminar: LaminarFlow | None = None) -> LinearMap:
    """Derivative of F at the laminar state (lam, 0, 0, 0) with respect to (q, w, phi)."""
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    if laminar is None:
        laminar = solve_laminar(model, lam, disc.h, disc.M)
    S, D = disc.profiles
    gam = model.gamma(laminar.psi)
    dgam = model.dgamma(laminar.psi)
    N, g = disc.N, disc.g
    kk = disc.k.copy()
    kk[0] = 1.0

    def apply(v):
        dq, dw, dphi = unpack(v, disc)
        wa = np.concatenate([[0.0], dw])
        rhs_w = -2.0 * gam[None, :] * (wa[:, None] * D)
        rhs_w[0] = 0.0
        A = solve_modes(rhs_w - dgam[None, :] * dphi, disc.L, disc.h)
        dB = normal_derivative_top(A, disc.h)
        # first variation of R (Theta vanishes at the laminar state)
        dR = dB / lam + g * wa / lam**2
        dR[0] -= dq / lam**2
        F1 = -dR[0]
        theta_b = -tanh_multiplier(N, disc.L, disc.h) * dR
        theta_b[0] = 0.0
        M2 = -theta_b / kk
        M2[0] = 0.0
        return pack(F1, dw - M2[1:], dphi - A)

    return LinearMap(apply, disc.size)


def t_isomorphism(lam: float, laminar: LaminarFlow, theta: StripField) -> tuple[PeriodicScalar, StripField]:
    """T(lam) theta = (-S theta / lam, theta - (psi_y / lam) V[S theta])."""
    if lam == 0:
        raise ValueError("T is undefined at lambda = 0")
    top = theta.trace("top")
    if abs(top.a[0]) > 1e-14 * max(1.0, float(np.max(np.abs(top.a)))):
        raise ValueError("trace of theta at y=0 must have zero mean")
    S, _ = extension_profiles(theta.N, theta.L, theta.h, theta.y)
    dw = PeriodicScalar.even(theta.L, -top.a / lam)
    dphi = theta.cos - laminar.psi_y[None, :] / lam * _V_modes(top.a, S)
    return dw, StripField.even(theta.L, theta.h, dphi)


def t_isomorphism_inverse(laminar: LaminarFlow, dw: PeriodicScalar, dphi: StripField) -> StripField:
    """(dw, dphi) -> dphi - psi_y V[dw]."""
    S, _ = extension_profiles(dphi.N, dphi.L, dphi.h, dphi.y)
    return StripField.even(dphi.L, dphi.h, dphi.cos - laminar.psi_y[None, :] * _V_modes(dw.resized(dphi.N).a, S))


def linearized_L(lam: float, laminar: LaminarFlow, theta: StripField, model: VorticityModel,
                 g: float = G) -> tuple[PeriodicScalar, StripField]:
    """(L^1 theta, L^2 theta) with L^2 theta = theta - (A_phi theta + V[S theta])."""
    S, _ = extension_profiles(theta.N, theta.L, theta.h, theta.y)
    top = theta.trace("top").a
    dgam = model.dgamma(laminar.psi)
    A = solve_modes(-dgam[None, :] * theta.cos, theta.L, theta.h)
    L2 = theta.cos - A - _V_modes(top, S)
    dA = normal_derivative_top(A, theta.h)
    inner = dA.copy()
    inner[0] = 0.0
    inner += (float(model.gamma(0.0)) - g / lam) / lam * top
    inner[0] = 0.0
    tb = -tanh_multiplier(theta.N, theta.L, theta.h) * inner
    kk = 2.0 * np.pi / theta.L * np.arange(theta.N + 1)
    kk[0] = 1.0
    anti = -tb / kk
    anti[0] = 0.0
    L1 = -top / lam - anti / lam
    L1[0] = 0.0
    return PeriodicScalar.even(theta.L, L1), StripField.even(theta.L, theta.h, L2)


# Field Jacobian ----------------------------------------------------------------------------------


class FieldJacobian:
    """I - d A / d phi on interior field values, with a mode-diagonal preconditioner.

    dA/dphi applies the strip Poisson solve to -gamma'(phi + psi_lam)|grad V|^2 dphi.
    """

    def __init__(self, state: State):
        from scipy.sparse.linalg import LinearOperator

        d = state.disc
        self.disc = d
        self.trivial_block = state.model.linear_in_field
        if self.trivial_block:
            return
        ev = Evaluation(state.problem, state.lam, state.q, state.w_modes, state.phi_modes, state.sign,
                        keep_field=True)
        psi = ev.laminar.psi[:, None] + ev.phi_grid
        self.c = state.model.dgamma(psi) * (ev.Vx**2 + ev.Vy**2)
        cbar = self.c.mean(axis=1)
        N, M = d.N, d.M
        off, diag = elliptic._numerov_bands(N, M, d.L, d.h)
        f = (d.h / M) ** 2 / 12.0
        self._lower = off + f * cbar[None, :-2]
        self._diag = diag + 10.0 * f * cbar[None, 1:-1]
        self._upper = off + f * cbar[None, 2:]
        n = (N + 1) * (M - 1)
        self.op = LinearOperator((n, n), matvec=self.matvec, dtype=float)
        self.prec = LinearOperator((n, n), matvec=self.precondition, dtype=float)

    def _full(self, v):
        d = self.disc
        u = np.zeros((d.N + 1, d.M + 1))
        u[:, 1:-1] = v.reshape(d.N + 1, d.M - 1)
        return u

    def matvec(self, v):
        v = np.asarray(v, dtype=float).ravel()
        if self.trivial_block:
            return v.copy()
        d = self.disc
        u = self._full(v)
        prod = -self.c * to_grid(u.T, None, d.P)
        a, _ = from_grid(prod, d.N)
        Au = solve_modes(a.T, d.L, d.h)
        return v - Au[:, 1:-1].ravel()

    def precondition(self, v):
        v = np.asarray(v, dtype=float).ravel()
        if self.trivial_block:
            return v.copy()
        from . import kernels

        d = self.disc
        y = elliptic.apply_modes(self._full(v), d.L, d.h)
        return kernels.tridiag_solve(self._lower, self._diag, self._upper, y).ravel()

    def solve(self, rhs, tol=1e-13):
        from scipy.sparse.linalg import gmres

        rhs = np.asarray(rhs, dtype=float).ravel()
        if self.trivial_block:
            return rhs.copy()
        nb = float(np.linalg.norm(rhs))
        if nb == 0.0:
            return np.zeros_like(rhs)
        x, info = gmres(self.op, rhs, rtol=tol, atol=0.0, restart=80, maxiter=20, M=self.prec)
        if info != 0:
            res = np.linalg.norm(self.matvec(x) - rhs) / nb
            if not res < 1e-9:
                raise ArithmeticError(f"field Jacobian solve did not converge (relative residual {res:.2e})")
        return x


# Physical-domain oracle --------------------------------------------------------------------------


@dataclass
class OracleReport:
    injective: bool
    interior: float = math.nan
    bernoulli: float = math.nan
    surface_streamline: float = math.nan
    bed_streamline: float = math.nan
    bed_flat: float = math.nan
    X: np.ndarray | None = None
    Y: np.ndarray | None = None

    def residuals(self) -> dict:
        return {"interior": self.interior, "bernoulli": self.bernoulli,
                "surface_streamline": self.surface_streamline, "bed_streamline": self.bed_streamline}


def physical_map(state: State):
    """U, V and their first derivatives on the (M+1) x P grid.

    U = x + sum w_k sin(k nu x) cosh(k nu (y+h))/sinh(k nu h) is the harmonic
    conjugate of -V, so that H = U + iV maps the strip onto the fluid domain.
    Each quantity is summed from its own series.
    """
    d = state.disc
    P = d.P
    S, D = d.profiles
    wa = np.concatenate([[0.0], state.w_modes])
    kk = d.k.copy()
    kk[0] = 1.0
    C = D / kk[:, None]
    C[0] = 0.0
    z = np.zeros((d.M + 1, d.N + 1))
    kw = (d.k * wa)[:, None]
    U = d.x[None, :] + to_grid(z, (wa[:, None] * C).T, P)
    V_a = wa[:, None] * S
    V_a[0] = d.y + d.h
    V = to_grid(V_a.T, None, P)
    Ux = 1.0 + to_grid((kw * C).T, None, P)
    Uy = to_grid(z, (kw * S).T, P)
    Vx = to_grid(z, (-kw * S).T, P)
    Vy_a = wa[:, None] * D
    Vy_a[0] = 1.0
    Vy = to_grid(Vy_a.T, None, P)
    return U, V, Ux, Uy, Vx, Vy


def physical_oracle(state: State) -> OracleReport:
    """Check the stream-function formulation in the physical domain.

    The map H = U + iV is evaluated from its own Fourier series, so the
    residuals test the reformulation rather than reuse it: the Laplacian is
    transplanted through the numerically computed Jacobian of H, derivatives
    in y come from independent finite differences.
    """
    state.require_admissible()
    from .spectral import self_intersects

    d = state.disc
    model = state.model
    U, V, Ux, Uy, Vx, Vy = physical_map(state)
    injective = (not self_intersects(state.w, d.h)) and float(np.min(V[-1])) > 0.0
    jac = Ux * Vy - Uy * Vx
    injective = injective and bool(np.all(jac > 0))
    rep = OracleReport(bool(injective), X=U, Y=V)
    if not injective:
        return rep
    lamflow = state.laminar
    psi_modes = state.phi_modes.copy()
    psi_modes[0] += lamflow.psi
    psi = to_grid(psi_modes.T, None, d.P)
    # x-derivatives spectrally, y-derivatives by finite differences
    kk = d.k
    z = np.zeros_like(psi_modes)
    psi_x = to_grid(z.T, (-kk[:, None] * psi_modes).T, d.P)
    psi_xx = to_grid((-(kk**2)[:, None] * psi_modes).T, None, d.P)
    psi_y = to_grid(derivative_y(psi_modes, d.h).T, None, d.P)
    psi_yy = to_grid(second_derivative_y(psi_modes, d.h).T, None, d.P)
    lap = (psi_xx + psi_yy) / jac
    interior = lap[1:-1] + model.gamma(psi[1:-1])
    rep.interior = float(np.max(np.abs(interior)))
    grad2_phys = (psi_x[-1] ** 2 + psi_y[-1] ** 2) / jac[-1]
    Q = state.q + 0.5 * state.lam**2
    bern = 0.5 * grad2_phys + d.g * (V[-1] - d.h) - Q
    rep.bernoulli = float(np.max(np.abs(bern)))
    rep.surface_streamline = float(np.max(np.abs(psi[-1])))
    rep.bed_streamline = float(np.max(np.abs(psi[0] + lamflow.m)))
    rep.bed_flat = float(np.max(np.abs(V[0])))
    return rep
