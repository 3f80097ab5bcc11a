"""Newton correction, branch switching at laminar bifurcation points, and
pseudo-arclength continuation with monitors for the ways a branch can end.

Continuation vectors are X = (lam, q, w_1..w_N, interior phi values).  The
Newton step eliminates the field block: with outer unknowns a = (lam, q, w)
and inner unknowns b = phi, the inner Jacobian I - dA/dphi is inverted
(identity when gamma' vanishes, preconditioned GMRES otherwise) and the dense
Schur complement on a is assembled from forward differences and LU-factored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from . import spectral
from .laminar import dispersion, kernel_multiplicity, solve_beta
from .operator import (AdmissibilityError, Discretization, FieldJacobian, Problem, State,
                       flattened_bernoulli_gap, pack, residual, t_isomorphism)
from .spectral import StripField, to_grid
from .vorticity import VorticityModel

EPS = np.finfo(float).eps

VERDICTS = {
    "lambda_unbounded": "(i)(a) |lambda| bound exceeded",
    "holder_unbounded": "(i)(b) Holder norm of w bound exceeded",
    "vorticity_unbounded": "(i)(c) vorticity L^p bound exceeded",
    "trivial": "(ii) return to the trivial branch",
    "flat_nonzero_phi": "(ii) flat surface with nonzero phi",
    "greatest_height": "(iii) greatest height approached",
    "degenerate_map": "(iv) conformal map degenerates",
    "self_intersection": "(v) surface self-intersection",
    "bed_contact": "(vi) surface approaches the bed",
    "budget": "budget exhausted",
    "stalled": "stalled",
    "nodal_failure": "nodal property failure",
    "resolution": "resolution exhausted",
}

ALTERNATIVES = {k for k in VERDICTS if k not in ("budget", "stalled", "nodal_failure", "resolution")}


class NewtonError(ArithmeticError):
    pass


class MaxIterationsError(NewtonError):
    pass


class SingularJacobianError(NewtonError):
    pass


class BifurcationError(ValueError):
    pass


@dataclass(frozen=True)
class ContinuationConfig:
    initial_step: float = 0.01
    min_step: float = 1e-6
    max_step: float = 0.05
    tolerance: float = 1e-11
    max_newton: int = 12
    max_points: int = 200
    resolution: tuple[int, int] = (32, 64)
    fast_iterations: int = 3
    slow_iterations: int = 7
    lambda_max: float = 1e3
    holder_max: float = 1e3
    vorticity_max: float = 1e6
    vorticity_p: float = 2.0
    trivial_w: float = 1e-8
    height_margin_min: float = 1e-3
    height_margin_relative: bool = False
    min_K_min: float = 1e-3
    bed_clearance_min: float = 1e-3
    tail_limit: float = 1e-10
    check_nodal: bool | None = None
    both_half_branches: bool = False
    cond_max: float = 1e13

    def __post_init__(self):
        if not (0 < self.min_step <= self.initial_step <= self.max_step):
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_newton < 1 or self.max_points < 1:
            raise ValueError("max_newton and max_points must be positive")


@dataclass
class BranchPoint:
    state: State
    s: float
    newton_iterations: int
    monitors: dict
    verdict_so_far: str = "running"
    branch: int = 1
    lam0: float = math.nan
    det_sign: int = 0
    sigma_min: float = math.nan


@dataclass
class BranchResult:
    points: list
    verdict: str
    lam0: float
    k0: int
    branch: int
    tangent: np.ndarray
    message: str = ""
    resume: dict | None = None

    @property
    def verdict_text(self) -> str:
        return VERDICTS.get(self.verdict, self.verdict)


# Constraints -------------------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    """Linear scalar constraint grad . X = value on continuation vectors."""

    grad: np.ndarray
    value: float
    kind: str = "linear"

    def __call__(self, X) -> float:
        return float(self.grad @ X - self.value)

    @classmethod
    def fixed_lambda(cls, disc: Discretization, lam: float) -> Constraint:
        g = np.zeros(disc.size + 1)
        g[0] = 1.0
        return cls(g, float(lam), "fixed_lambda")

    @classmethod
    def fixed_amplitude(cls, disc: Discretization, k: int, amplitude: float) -> Constraint:
        g = np.zeros(disc.size + 1)
        g[1 + k] = 1.0
        return cls(g, float(amplitude), "fixed_amplitude")

    @classmethod
    def arclength(cls, X0, tangent, ds, weights) -> Constraint:
        g = weights * tangent
        return cls(g, float(g @ X0 + ds), "arclength")


def arclength_weights(disc: Discretization) -> np.ndarray:
    w = np.ones(disc.size + 1)
    w[2 + disc.N:] = 1.0 / math.sqrt(disc.N * disc.M)
    return w


def weighted_norm(v, weights) -> float:
    return float(math.sqrt(np.sum(weights * v * v)))


# Tangent at a bifurcation point ----------------------------------------------------------------


def bifurcation_tangent(model: VorticityModel, lam0: float, k0: int, disc: Discretization,
                        K_max: int = 64, check: bool = True) -> np.ndarray:
    """Continuation-vector direction (0, 0, T(lam0) theta) with theta = beta cos(k0 nu x).

    Scaled by |lam0| so the mode-k0 coefficient of w is -sign(lam0).
    """
    if not 1 <= k0 <= disc.N:
        raise BifurcationError(f"mode {k0} is not resolved with N={disc.N}")
    mu = -(k0 * disc.nu) ** 2
    r = dispersion(model, lam0, mu, disc.h, disc.g, disc.M)
    if check:
        mult, modes = kernel_multiplicity(model, lam0, disc.h, disc.L, K_max, disc.g, disc.M)
        if mult != 1 or modes != [k0]:
            raise BifurcationError(f"kernel at lambda={lam0} has modes {modes}; need exactly [{k0}]")
        scale = abs(r.beta_y0) + 9.81 / lam0**2 + abs(float(model.gamma(0.0)) / lam0)
        if abs(r.d_lambda) < 1e-8 * scale / abs(lam0):
            raise BifurcationError(f"transversality fails at lambda={lam0} (d_lambda={r.d_lambda:.3e})")
    problem = Problem(model, disc)
    lamflow = problem.laminar(lam0)
    beta = solve_beta(model, lam0, mu, disc.h, lamflow, disc.g).beta
    theta = np.zeros((disc.N + 1, disc.M + 1))
    theta[k0] = beta
    dw, dphi = t_isomorphism(lam0, lamflow, StripField.even(disc.L, disc.h, theta))
    scale = abs(lam0)
    return np.concatenate([[0.0], scale * pack(0.0, dw.a[1:], dphi.cos)])


# Newton corrector ------------------------------------------------------------------------------


@dataclass
class NewtonResult:
    state: State
    iterations: int
    residual: float
    det_sign: int
    sigma_min: float


def _residual_at(problem, X, sign):
    st = State.from_vector(problem, X, sign)
    if not st.admissible:
        return st, None
    return st, residual(st)


def newton_correct(guess: State, constraint: Constraint, tolerance: float = 1e-11, max_iter: int = 12,
                   cond_max: float = 1e13) -> NewtonResult:
    """Damped Newton on [F; constraint] starting from ``guess``."""
    problem = guess.problem
    disc = problem.disc
    sign = guess.sign
    na = disc.N + 2
    nF = disc.N + 1
    X = guess.vector()
    state, r = _residual_at(problem, X, sign)
    if r is None:
        raise AdmissibilityError(state.margins)
    rc = constraint(X)
    det_sign, sigma_min = 0, math.nan
    for it in range(max_iter + 1):
        if max(float(np.max(np.abs(r))), abs(rc)) <= tolerance:
            return NewtonResult(state, it, float(np.max(np.abs(r))), det_sign, sigma_min)
        if it == max_iter:
            break
        fj = FieldJacobian(state)
        ga, gb = constraint.grad[:na], constraint.grad[na:]
        S = np.empty((na, na))
        Xmat = np.empty((na, X.size - na))
        for i in range(na):
            eps = math.sqrt(EPS) * (1.0 + abs(X[i]))
            Xp = X.copy()
            Xp[i] += eps
            _, rp = _residual_at(problem, Xp, sign)
            if rp is None:
                eps = -eps
                Xp[i] = X[i] + eps
                _, rp = _residual_at(problem, Xp, sign)
                if rp is None:
                    raise AdmissibilityError(state.margins)
            col = (rp - r) / eps
            Xmat[i] = fj.solve(col[nF:])
            if fj.trivial_block:
                S[:nF, i] = col[:nF]
            else:
                Xq = X.copy()
                Xq[i] += eps
                Xq[na:] -= eps * Xmat[i]
                _, rq = _residual_at(problem, Xq, sign)
                if rq is None:
                    raise AdmissibilityError(state.margins)
                S[:nF, i] = (rq[:nF] - r[:nF]) / eps
            S[nF, i] = ga[i] - gb @ Xmat[i]
        y = fj.solve(r[nF:])
        rhs = np.empty(na)
        if fj.trivial_block:
            rhs[:nF] = -r[:nF]
        else:
            eps = math.sqrt(EPS) * (1.0 + float(np.max(np.abs(X[na:])))) / max(1.0, float(np.max(np.abs(y))))
            Xq = X.copy()
            Xq[na:] += eps * y
            _, rq = _residual_at(problem, Xq, sign)
            if rq is None:
                raise AdmissibilityError(state.margins)
            rhs[:nF] = -r[:nF] + (rq[:nF] - r[:nF]) / eps
        rhs[nF] = -rc + gb @ y
        sv = np.linalg.svd(S, compute_uv=False)
        if not np.all(np.isfinite(sv)) or sv[-1] <= sv[0] / cond_max:
            raise SingularJacobianError(f"Jacobian numerically singular (condition {sv[0] / max(sv[-1], 1e-300):.2e})")
        lu = scipy.linalg.lu_factor(S)
        da = scipy.linalg.lu_solve(lu, rhs)
        det_sign = int(np.sign(np.prod(np.sign(np.diag(lu[0])))) * (-1) ** np.count_nonzero(lu[1] != np.arange(na)))
        sigma_min = float(sv[-1])
        db = -y - Xmat.T @ da
        step = np.concatenate([da, db])
        alpha = 1.0
        for _ in range(30):
            Xn = X + alpha * step
            st_n, r_n = _residual_at(problem, Xn, sign)
            if r_n is not None and np.all(np.isfinite(r_n)):
                break
            alpha *= 0.5
        else:
            raise AdmissibilityError(st_n.margins)
        X, state, r = Xn, st_n, r_n
        rc = constraint(X)
    raise MaxIterationsError(f"Newton did not converge in {max_iter} iterations (residual {np.max(np.abs(r)):.2e})")


# Monitors ----------------------------------------------------------------------------------------


def holder_quotient(values: np.ndarray, L: float, alpha: float = 7.0 / 8.0) -> float:
    """Discrete periodic Holder seminorm max |u_i - u_j| / dist(x_i, x_j)^alpha."""
    n = values.size
    x = L * np.arange(n) / n
    dx = np.abs(x[:, None] - x[None, :])
    dist = np.minimum(dx, L - dx)
    np.fill_diagonal(dist, np.inf)
    return float(np.max(np.abs(values[:, None] - values[None, :]) / dist**alpha))


def vorticity_lp(state: State, p: float = 2.0) -> float:
    """(integral over one period of the fluid domain of |gamma(psi)|^p)^(1/p)."""
    model = state.model
    if model.is_zero:
        return 0.0
    d = state.disc
    from .elliptic import gradient_V_grid

    Vx, Vy = gradient_V_grid(state.w_modes, d.L, d.h, d.M, d.P)
    psi = to_grid(state.phi_modes.T, None, d.P) + state.laminar.psi[:, None]
    integrand = (np.abs(model.gamma(psi)) ** p * (Vx**2 + Vy**2)).mean(axis=1) * d.L
    return float(scipy.integrate.trapezoid(integrand, d.y) ** (1.0 / p))


def monitors(state: State, p: float = 2.0) -> dict:
    d = state.disc
    ev = state.evaluation
    w = ev.w_grid
    return {
        "greatest_height_margin": ev.margins["greatest_height_margin"],
        "min_K": ev.margins["min_K"],
        "min_stagnation": ev.margins["min_stagnation"],
        "bed_clearance": float(np.min(w) + d.h),
        "self_intersect": bool(spectral.self_intersects(state.w, d.h)),
        "wave_height": float(np.max(w) - np.min(w)),
        "vorticity_Lp": vorticity_lp(state, p),
        "lambda": state.lam,
        "q": state.q,
        "w_sup": float(np.max(np.abs(w))),
        "phi_sup": float(np.max(np.abs(state.phi_modes))) if state.phi_modes.size else 0.0,
        "wp_sup": float(np.max(np.abs(ev.wp_grid))),
        "w_holder": float(np.max(np.abs(w)) + holder_quotient(w, d.L)),
        "bernoulli_gap": flattened_bernoulli_gap(state),
        "w_tail": spectral_tail(state.w_modes),
    }


def spectral_tail(modes: np.ndarray, fraction: float = 0.1) -> float:
    """max |w_k| over the top ``fraction`` of modes relative to max |w_k|."""
    top = float(np.max(np.abs(modes))) if modes.size else 0.0
    if top == 0.0:
        return 0.0
    n = max(1, int(round(fraction * modes.size)))
    return float(np.max(np.abs(modes[-n:]))) / top


def classify(mon: dict, cfg: ContinuationConfig, s: float, phi_scale: float, lam0: float = 1.0) -> str | None:
    if abs(mon["lambda"]) > cfg.lambda_max:
        return "lambda_unbounded"
    if mon["w_holder"] > cfg.holder_max:
        return "holder_unbounded"
    if mon["vorticity_Lp"] > cfg.vorticity_max:
        return "vorticity_unbounded"
    if mon["w_sup"] < cfg.trivial_w and s > 10 * cfg.initial_step:
        return "flat_nonzero_phi" if mon["phi_sup"] > 1e-8 * max(1.0, phi_scale) else "trivial"
    height_min = cfg.height_margin_min * (0.5 * lam0 * lam0 if cfg.height_margin_relative else 1.0)
    if mon["greatest_height_margin"] < height_min:
        return "greatest_height"
    if mon["min_K"] < cfg.min_K_min:
        return "degenerate_map"
    if mon["self_intersect"]:
        return "self_intersection"
    if mon["bed_clearance"] < cfg.bed_clearance_min:
        return "bed_contact"
    return None


def nodal_condition(model: VorticityModel, lam0: float, h: float, lo: float = -1e3, hi: float = 1e3) -> bool:
    """sup gamma' < pi^2/(4h^2) and lam0 gamma'' >= 0 (sampled)."""
    if model.code == 0:
        return True
    if model.code == 1:
        return model.params[0] < (math.pi / (2 * h)) ** 2
    s = np.linspace(lo, hi, 20001)
    return bool(np.max(model.dgamma(s)) < (math.pi / (2 * h)) ** 2 and np.all(lam0 * model.d2gamma(s) >= 0))


# Continuation ----------------------------------------------------------------------------------


def continue_branch(model: VorticityModel, lam0: float, k0: int, config: ContinuationConfig,
                    L: float = 2 * math.pi, h: float = 1.0, g: float = 9.81, branch: int = 1,
                    resume: dict | None = None, callback=None, check_bifurcation: bool = True) -> BranchResult:
    """Follow the branch bifurcating from (lam0, 0, 0, 0) in mode k0."""
    N, M = config.resolution
    disc = Discretization(L, h, N, M, g)
    problem = Problem(model, disc)
    weights = arclength_weights(disc)
    sign = int(np.sign(lam0))
    check_nodal = config.check_nodal
    if check_nodal is None:
        check_nodal = nodal_condition(model, lam0, h)
    if resume is None:
        t = bifurcation_tangent(model, lam0, k0, disc, check=check_bifurcation)
        t = branch * t / weighted_norm(t, weights)
        X_prev = problem.trivial(lam0).vector()
        ds = config.initial_step
        s = 0.0
    else:
        t = np.asarray(resume["tangent"], dtype=float)
        X_prev = np.asarray(resume["X"], dtype=float)
        ds = float(resume["step"])
        s = float(resume["s"])
        sign = int(resume.get("sign", sign))
    t0 = t.copy()
    points: list[BranchPoint] = []
    verdict, message = "budget", ""
    phi_scale = 1.0
    while len(points) < config.max_points:
        guess = State.from_vector(problem, X_prev + ds * t, sign)
        constraint = Constraint.arclength(X_prev, t, ds, weights)
        try:
            if not guess.admissible:
                raise AdmissibilityError(guess.margins)
            res = newton_correct(guess, constraint, config.tolerance, config.max_newton, config.cond_max)
        except (NewtonError, AdmissibilityError, ArithmeticError) as exc:
            ds *= 0.5
            message = str(exc)
            if ds < config.min_step:
                verdict = "stalled"
                break
            continue
        st = res.state
        X = st.vector()
        s += ds
        mon = monitors(st, config.vorticity_p)
        phi_scale = max(phi_scale, mon["phi_sup"])
        point = BranchPoint(st, s, res.iterations, mon, "running", branch, lam0, res.det_sign, res.sigma_min)
        if mon["min_stagnation"] <= 0:
            raise AssertionError("sign of S d_y A + lambda changed along the branch")
        outcome = classify(mon, config, s, phi_scale, lam0)
        if outcome is None and mon["w_tail"] > config.tail_limit:
            outcome = "resolution"
            message = f"spectral tail {mon['w_tail']:.2e} exceeds {config.tail_limit:.0e}; refine (N, M)"
        if outcome is None and check_nodal:
            from .diagnostics import f_field, nodal_check

            rep = nodal_check(st, lam0, branch)
            if not rep.nodal_ok or not f_field(st, branch)[1] == "positive":
                outcome = "nodal_failure"
                message = f"nodal check failed at s={s:.6g}: {rep.failures()}"
        point.verdict_so_far = outcome or "running"
        points.append(point)
        if callback is not None:
            callback(point)
        step_vec = X - X_prev
        t = step_vec / weighted_norm(step_vec, weights)
        X_prev = X
        if outcome is not None:
            verdict = outcome
            break
        if res.iterations <= config.fast_iterations:
            ds = min(2.0 * ds, config.max_step)
        elif res.iterations > config.slow_iterations:
            ds = max(0.5 * ds, config.min_step)
    if points and points[-1].verdict_so_far == "running":
        points[-1].verdict_so_far = verdict
    resume_data = {"X": X_prev.tolist(), "tangent": t.tolist(), "step": ds, "s": s, "sign": sign}
    return BranchResult(points, verdict, float(lam0), int(k0), branch, t0, message, resume_data)


def continue_both(model, lam0, k0, config, **kw) -> list[BranchResult]:
    out = [continue_branch(model, lam0, k0, config, branch=1, **kw)]
    if config.both_half_branches:
        out.append(continue_branch(model, lam0, k0, config, branch=-1, **kw))
    return out


def detect_secondary_bifurcation(points, drop: float = 0.1) -> list[float]:
    """Arclengths where the bordered Jacobian changes determinant sign or its
    smallest singular value has a sharp interior minimum."""
    if len(points) < 3:
        raise ValueError("insufficient points (need at least 3)")
    flagged = []
    for a, b in zip(points[:-1], points[1:]):
        if a.det_sign and b.det_sign and a.det_sign != b.det_sign:
            flagged.append(0.5 * (a.s + b.s))
    for a, b, c in zip(points[:-2], points[1:-1], points[2:]):
        sm = b.sigma_min
        if np.isfinite(sm) and sm < drop * min(a.sigma_min, c.sigma_min):
            if not any(abs(f - b.s) <= abs(c.s - a.s) for f in flagged):
                flagged.append(b.s)
    return sorted(flagged)
