"""Pure-Python reference kernels, used when the compiled extension is absent."""

import bisect
import math

import numpy as np

BACKEND = "python"


def coded_gamma(code, params):
    """Scalar evaluator ``s -> (gamma, gamma', gamma'')`` for a coded vorticity model."""
    p = [float(v) for v in params]
    if code == 0:
        g = p[0]
        return lambda s: (g, 0.0, 0.0)
    if code == 1:
        a, b = p[0], p[1]
        return lambda s: (a * s + b, a, 0.0)
    if code == 2:
        amp, freq, phase, off = p[:4]

        def sine(s):
            arg = freq * s + phase
            return (amp * math.sin(arg) + off, amp * freq * math.cos(arg),
                    -amp * freq * freq * math.sin(arg))
        return sine
    n = int(p[0])
    knots = p[1:n + 2]
    coef = [p[n + 2 + 4 * i:n + 6 + 4 * i] for i in range(n)]
    dt = knots[n] - knots[n - 1]
    c = coef[n - 1]
    end_val = c[0] + dt * (c[1] + dt * (c[2] + dt * c[3]))
    end_slope = c[1] + dt * (2.0 * c[2] + 3.0 * c[3] * dt)

    def table(s):
        if s <= knots[0]:
            return coef[0][0] + coef[0][1] * (s - knots[0]), coef[0][1], 0.0
        if s >= knots[n]:
            return end_val + end_slope * (s - knots[n]), end_slope, 0.0
        i = min(bisect.bisect_right(knots, s) - 1, n - 1)
        t = s - knots[i]
        c0, c1, c2, c3 = coef[i]
        return (c0 + t * (c1 + t * (c2 + t * c3)), c1 + t * (2.0 * c2 + 3.0 * c3 * t),
                2.0 * c2 + 6.0 * c3 * t)
    return table


def gamma_eval(code, params, s):
    f = coded_gamma(code, params)
    return np.array([f(float(v)) for v in s]).T.reshape(3, len(s))


def _rk4(rhs, u, dy, nsteps, store, out):
    for j in range(nsteps):
        k1 = rhs(j, 0, u)
        k2 = rhs(j, 1, [u[c] + 0.5 * dy * k1[c] for c in range(4)])
        k3 = rhs(j, 1, [u[c] + 0.5 * dy * k2[c] for c in range(4)])
        k4 = rhs(j, 2, [u[c] + dy * k3[c] for c in range(4)])
        u = [u[c] + dy * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) / 6.0 for c in range(4)]
        out[j + 1] = u
        if store and not all(math.isfinite(v) for v in u):
            out[j + 2:] = np.nan
            break
    return out


def laminar_rk4(gamma3, lam, h, nsteps):
    """See the compiled ``laminar_rk4``; ``gamma3`` is a scalar evaluator."""
    out = np.empty((nsteps + 1, 4))
    u = [0.0, float(lam), 0.0, 1.0]
    out[0] = u

    def rhs(j, stage, v):
        g0, g1, _ = gamma3(v[0])
        return (v[1], -g0, v[3], -g1 * v[2])
    return _rk4(rhs, u, -h / nsteps, nsteps, True, out)


def beta_rk4(gamma3, mu, h, nsteps, psi, dpsi):
    """See the compiled ``beta_rk4``."""
    out = np.empty((nsteps + 1, 4))
    u = [0.0, 1.0, 0.0, 0.0]
    out[0] = u
    psi = [float(v) for v in psi]
    dpsi = [float(v) for v in dpsi]

    def rhs(i, stage, v):
        j = 2 * (nsteps - i) - stage
        _, g1, g2 = gamma3(psi[j])
        return (v[1], -(g1 + mu) * v[0], v[3], -(g1 + mu) * v[2] - g2 * dpsi[j] * v[0])
    return _rk4(rhs, u, h / nsteps, nsteps, False, out)


def tridiag_solve(lower, diag, upper, rhs):
    """Batched Thomas algorithm, vectorized over rows."""
    nb, n = diag.shape
    cp = np.empty((nb, n))
    x = np.empty((nb, n))
    m = diag[:, 0].copy()
    cp[:, 0] = upper[:, 0] / m
    x[:, 0] = rhs[:, 0] / m
    for i in range(1, n):
        m = diag[:, i] - lower[:, i] * cp[:, i - 1]
        cp[:, i] = upper[:, i] / m
        x[:, i] = (rhs[:, i] - lower[:, i] * x[:, i - 1]) / m
    for i in range(n - 2, -1, -1):
        x[:, i] -= cp[:, i] * x[:, i + 1]
    return x
