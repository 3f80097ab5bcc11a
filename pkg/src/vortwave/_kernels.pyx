# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: vorticity evaluation, Runge-Kutta shooting, batched Thomas solves."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, isfinite

cnp.import_array()

BACKEND = "compiled"


cdef void _gamma3(int code, const double[::1] p, double s, double* g0, double* g1, double* g2) noexcept nogil:
    cdef int n, lo, hi, mid, i
    cdef double t, c0, c1, c2, c3, arg
    if code == 0:
        g0[0] = p[0]
        g1[0] = 0.0
        g2[0] = 0.0
    elif code == 1:
        g0[0] = p[0] * s + p[1]
        g1[0] = p[0]
        g2[0] = 0.0
    elif code == 2:
        arg = p[1] * s + p[2]
        g0[0] = p[0] * sin(arg) + p[3]
        g1[0] = p[0] * p[1] * cos(arg)
        g2[0] = -p[0] * p[1] * p[1] * sin(arg)
    else:
        # piecewise cubic: p = [n, x_0..x_n, c_00, c_01, c_02, c_03, c_10, ...]
        n = <int> p[0]
        if s <= p[1]:
            c0 = p[2 + n]
            c1 = p[3 + n]
            g0[0] = c0 + c1 * (s - p[1])
            g1[0] = c1
            g2[0] = 0.0
            return
        if s >= p[1 + n]:
            i = n - 1
            t = p[1 + n] - p[1 + i]
            c0 = p[2 + n + 4 * i]
            c1 = p[3 + n + 4 * i]
            c2 = p[4 + n + 4 * i]
            c3 = p[5 + n + 4 * i]
            g1[0] = c1 + t * (2.0 * c2 + 3.0 * c3 * t)
            g0[0] = c0 + t * (c1 + t * (c2 + t * c3)) + g1[0] * (s - p[1 + n])
            g2[0] = 0.0
            return
        lo = 0
        hi = n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if p[1 + mid] <= s:
                lo = mid
            else:
                hi = mid
        t = s - p[1 + lo]
        c0 = p[2 + n + 4 * lo]
        c1 = p[3 + n + 4 * lo]
        c2 = p[4 + n + 4 * lo]
        c3 = p[5 + n + 4 * lo]
        g0[0] = c0 + t * (c1 + t * (c2 + t * c3))
        g1[0] = c1 + t * (2.0 * c2 + 3.0 * c3 * t)
        g2[0] = 2.0 * c2 + 6.0 * c3 * t


def gamma_eval(int code, const double[::1] params, double[::1] s):
    """Return (gamma, gamma', gamma'') sampled at the points s."""
    cdef Py_ssize_t i, n = s.shape[0]
    out = np.empty((3, n))
    cdef double[:, ::1] o = out
    cdef double a, b, c
    for i in range(n):
        _gamma3(code, params, s[i], &a, &b, &c)
        o[0, i] = a
        o[1, i] = b
        o[2, i] = c
    return out


cdef inline void _lam_rhs(int code, const double[::1] p, double* u, double* du) noexcept nogil:
    cdef double g0, g1, g2
    _gamma3(code, p, u[0], &g0, &g1, &g2)
    du[0] = u[1]
    du[1] = -g0
    du[2] = u[3]
    du[3] = -g1 * u[2]


def laminar_rk4(int code, const double[::1] params, double lam, double h, int nsteps):
    """Integrate psi'' = -gamma(psi) and its lambda-variation from y=0 down to y=-h.

    Returns an array of shape (nsteps+1, 4) holding (psi, psi_y, dpsi, dpsi_y)
    at y = -j*h/nsteps, j = 0..nsteps.
    """
    out = np.empty((nsteps + 1, 4))
    cdef double[:, ::1] o = out
    cdef double dy = -h / nsteps
    cdef double u[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double tmp[4]
    cdef int j, c
    u[0] = 0.0
    u[1] = lam
    u[2] = 0.0
    u[3] = 1.0
    with nogil:
        for c in range(4):
            o[0, c] = u[c]
        for j in range(nsteps):
            _lam_rhs(code, params, u, k1)
            for c in range(4):
                tmp[c] = u[c] + 0.5 * dy * k1[c]
            _lam_rhs(code, params, tmp, k2)
            for c in range(4):
                tmp[c] = u[c] + 0.5 * dy * k2[c]
            _lam_rhs(code, params, tmp, k3)
            for c in range(4):
                tmp[c] = u[c] + dy * k3[c]
            _lam_rhs(code, params, tmp, k4)
            for c in range(4):
                u[c] = u[c] + dy * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) / 6.0
                o[j + 1, c] = u[c]
            if not (isfinite(u[0]) and isfinite(u[1]) and isfinite(u[2]) and isfinite(u[3])):
                break
    return out


cdef inline void _beta_rhs(int code, const double[::1] p, double mu, double psi, double dpsi,
                           double* u, double* du) noexcept nogil:
    cdef double g0, g1, g2
    _gamma3(code, p, psi, &g0, &g1, &g2)
    du[0] = u[1]
    du[1] = -(g1 + mu) * u[0]
    du[2] = u[3]
    du[3] = -(g1 + mu) * u[2] - g2 * dpsi * u[0]


def beta_rk4(int code, const double[::1] params, double mu, double h, int nsteps,
             const double[::1] psi, const double[::1] dpsi):
    """Shoot z'' + (gamma'(psi)+mu) z = 0 from y=-h with z=0, z'=1, upward to y=0.

    ``psi`` and ``dpsi`` hold the laminar profile and its lambda-derivative on
    the half-step nodes y = -j*h/(2*nsteps), j = 0..2*nsteps (top first).
    Returns (nsteps+1, 4): (z, z', zeta, zeta') at y = -h + i*h/nsteps, where
    zeta is the lambda-variation driven by -gamma''(psi) dpsi z.
    """
    out = np.empty((nsteps + 1, 4))
    cdef double[:, ::1] o = out
    cdef double dy = h / nsteps
    cdef double u[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double tmp[4]
    cdef int i, c, j
    u[0] = 0.0
    u[1] = 1.0
    u[2] = 0.0
    u[3] = 0.0
    with nogil:
        for c in range(4):
            o[0, c] = u[c]
        for i in range(nsteps):
            j = 2 * (nsteps - i)
            _beta_rhs(code, params, mu, psi[j], dpsi[j], u, k1)
            for c in range(4):
                tmp[c] = u[c] + 0.5 * dy * k1[c]
            _beta_rhs(code, params, mu, psi[j - 1], dpsi[j - 1], tmp, k2)
            for c in range(4):
                tmp[c] = u[c] + 0.5 * dy * k2[c]
            _beta_rhs(code, params, mu, psi[j - 1], dpsi[j - 1], tmp, k3)
            for c in range(4):
                tmp[c] = u[c] + dy * k3[c]
            _beta_rhs(code, params, mu, psi[j - 2], dpsi[j - 2], tmp, k4)
            for c in range(4):
                u[c] = u[c] + dy * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) / 6.0
                o[i + 1, c] = u[c]
    return out


def tridiag_solve(const double[:, ::1] lower, const double[:, ::1] diag,
                  const double[:, ::1] upper, const double[:, ::1] rhs):
    """Solve a batch of tridiagonal systems (one per row) by the Thomas algorithm.

    ``lower[:, 0]`` and ``upper[:, n-1]`` are ignored.
    """
    cdef Py_ssize_t nb = diag.shape[0], n = diag.shape[1], b, i
    out = np.empty((nb, n))
    cdef double[:, ::1] x = out
    cdef double[::1] cp = np.empty(n)
    cdef double m
    with nogil:
        for b in range(nb):
            m = diag[b, 0]
            cp[0] = upper[b, 0] / m
            x[b, 0] = rhs[b, 0] / m
            for i in range(1, n):
                m = diag[b, i] - lower[b, i] * cp[i - 1]
                cp[i] = upper[b, i] / m
                x[b, i] = (rhs[b, i] - lower[b, i] * x[b, i - 1]) / m
            for i in range(n - 2, -1, -1):
                x[b, i] = x[b, i] - cp[i] * x[b, i + 1]
    return out
