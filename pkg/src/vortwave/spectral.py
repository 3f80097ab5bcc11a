"""Fourier calculus on L-periodic functions and harmonic extension to the strip.

Periodic functions are stored as real cosine/sine coefficient arrays
``a_k, b_k`` (k = 0..N), so that

    u(x) = a_0 + sum_k a_k cos(k nu x) + b_k sin(k nu x),   nu = 2 pi / L.

Fields on the strip R x (-h, 0) are stored per x-mode on a uniform y-grid
with M+1 points.  Pointwise nonlinear work happens on an oversampled
collocation grid of ``collocation_size(N)`` points (3/2 rule).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PeriodicScalar",
    "StripField",
    "collocation_size",
    "to_grid",
    "from_grid",
    "coth_multiplier",
    "tanh_multiplier",
    "hilbert_strip",
    "hilbert_strip_inverse",
    "project_zero_mean",
    "mean",
    "antiderivative",
    "differentiate",
    "harmonic_extension",
    "extension_profiles",
    "surface_gradient",
    "metric_K",
    "surface_curve",
    "curve_self_intersects",
    "self_intersects",
]

# Beyond this argument coth and tanh equal 1 to double precision.
_SATURATION = 20.0


class ZeroMeanError(ValueError):
    pass


def collocation_size(N: int) -> int:
    """Even number of collocation points that dealiases quadratic products of N modes."""
    n = 3 * (N + 1)
    return n + (n % 2)


def to_grid(a: np.ndarray, b: np.ndarray | None, P: int) -> np.ndarray:
    """Sample a cosine/sine series at x_j = j L / P along the last axis."""
    N = a.shape[-1] - 1
    if 2 * N >= P:
        raise ValueError(f"grid of {P} points cannot resolve {N} modes")
    c = np.zeros(a.shape[:-1] + (P // 2 + 1,), dtype=complex)
    c[..., : N + 1] = 0.5 * P * a
    if b is not None:
        c[..., 1 : N + 1] -= 0.5j * P * b[..., 1:]
    c[..., 0] = P * a[..., 0]
    return np.fft.irfft(c, n=P, axis=-1)


def from_grid(values: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Project grid samples (last axis) onto cosine/sine modes 0..N."""
    P = values.shape[-1]
    if 2 * N >= P:
        raise ValueError(f"grid of {P} points cannot resolve {N} modes")
    c = np.fft.rfft(values, axis=-1)[..., : N + 1] / P
    a = 2.0 * c.real
    b = -2.0 * c.imag
    a[..., 0] = c[..., 0].real
    b[..., 0] = 0.0
    return a, b


def _wavenumbers(N: int, L: float) -> np.ndarray:
    return 2.0 * np.pi / L * np.arange(N + 1)


def coth_multiplier(N: int, L: float, h: float) -> np.ndarray:
    """coth(k nu h) for k = 0..N, with the k = 0 entry set to 0."""
    z = _wavenumbers(N, L) * h
    out = np.ones(N + 1)
    small = z < _SATURATION
    with np.errstate(divide="ignore"):
        out[small] = 1.0 / np.tanh(z[small])
    out[0] = 0.0
    return out


def tanh_multiplier(N: int, L: float, h: float) -> np.ndarray:
    z = _wavenumbers(N, L) * h
    out = np.ones(N + 1)
    small = z < _SATURATION
    out[small] = np.tanh(z[small])
    out[0] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class PeriodicScalar:
    """Truncated Fourier series of an L-periodic real function."""

    L: float
    a: np.ndarray
    b: np.ndarray
    parity: str = "none"

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise ValueError("cosine and sine coefficient arrays must be 1-d and of equal length")
        if a.size < 2:
            raise ValueError("truncation order N must be at least 1")
        if not self.L > 0:
            raise ValueError("period must be positive")
        if self.parity not in ("even", "odd", "none"):
            raise ValueError(f"unknown parity {self.parity!r}")
        b[0] = 0.0
        if self.parity == "even" and np.any(b != 0):
            raise ValueError("even function with nonzero sine coefficients")
        if self.parity == "odd" and np.any(a != 0):
            raise ValueError("odd function with nonzero cosine coefficients")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def even(cls, L, a):
        a = np.asarray(a, dtype=float)
        return cls(L, a, np.zeros_like(a), "even")

    @classmethod
    def odd(cls, L, b):
        b = np.asarray(b, dtype=float)
        return cls(L, np.zeros_like(b), b, "odd")

    @classmethod
    def zeros(cls, L, N, parity="even"):
        return cls(L, np.zeros(N + 1), np.zeros(N + 1), parity)

    @classmethod
    def from_samples(cls, values, L, N=None, parity="none"):
        """Interpolate samples on x_j = j L / P; N defaults to the largest resolvable order."""
        values = np.asarray(values, dtype=float)
        if N is None:
            N = (values.size - 1) // 2
        a, b = from_grid(values, N)
        if parity == "even":
            b[:] = 0.0
        elif parity == "odd":
            a[:] = 0.0
        return cls(L, a, b, parity)

    @property
    def N(self) -> int:
        return self.a.size - 1

    @property
    def nu(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def zero_mean(self) -> bool:
        return self.a[0] == 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self.nu * np.arange(self.N + 1)
        ph = np.multiply.outer(x, k)
        return np.cos(ph) @ self.a + np.sin(ph) @ self.b

    def samples(self, P=None) -> np.ndarray:
        P = collocation_size(self.N) if P is None else P
        return to_grid(self.a, self.b, P)

    def grid(self, P=None) -> np.ndarray:
        P = collocation_size(self.N) if P is None else P
        return self.L * np.arange(P) / P

    def resized(self, N: int) -> PeriodicScalar:
        a = np.zeros(N + 1)
        b = np.zeros(N + 1)
        n = min(N, self.N) + 1
        a[:n] = self.a[:n]
        b[:n] = self.b[:n]
        return PeriodicScalar(self.L, a, b, self.parity)

    def _combine(self, other, sign):
        if isinstance(other, PeriodicScalar):
            if other.L != self.L:
                raise ValueError("period mismatch")
            N = max(self.N, other.N)
            u, v = self.resized(N), other.resized(N)
            parity = self.parity if self.parity == other.parity else "none"
            return PeriodicScalar(self.L, u.a + sign * v.a, u.b + sign * v.b, parity)
        a = self.a.copy()
        a[0] += sign * float(other)
        parity = self.parity if (self.parity != "odd" or other == 0) else "none"
        return PeriodicScalar(self.L, a, self.b, parity)

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return PeriodicScalar(self.L, -self.a, -self.b, self.parity)

    def __mul__(self, c):
        c = float(c)
        return PeriodicScalar(self.L, c * self.a, c * self.b, self.parity)

    __rmul__ = __mul__

    def norm_inf(self, P=None) -> float:
        return float(np.max(np.abs(self.samples(P))))


def _scale(u: PeriodicScalar) -> float:
    return max(1.0, float(np.max(np.abs(u.a))), float(np.max(np.abs(u.b))))


def _require_zero_mean(u: PeriodicScalar, what: str):
    if abs(u.a[0]) > 1e-14 * _scale(u):
        raise ZeroMeanError(f"{what} requires zero mean (got mean {u.a[0]:.3e})")


def _flip_parity(p: str) -> str:
    return {"even": "odd", "odd": "even"}.get(p, "none")


def hilbert_strip(u: PeriodicScalar, h: float) -> PeriodicScalar:
    """Periodic Hilbert transform on the strip: multiplier -i coth(k nu h)."""
    _require_zero_mean(u, "hilbert_strip")
    m = coth_multiplier(u.N, u.L, h)
    return PeriodicScalar(u.L, -m * u.b, m * u.a, _flip_parity(u.parity))


def hilbert_strip_inverse(u: PeriodicScalar, h: float) -> PeriodicScalar:
    """Inverse of ``hilbert_strip`` on zero-mean functions: multiplier i tanh(k nu h)."""
    _require_zero_mean(u, "hilbert_strip_inverse")
    m = tanh_multiplier(u.N, u.L, h)
    return PeriodicScalar(u.L, m * u.b, -m * u.a, _flip_parity(u.parity))


def project_zero_mean(u: PeriodicScalar) -> PeriodicScalar:
    a = u.a.copy()
    a[0] = 0.0
    return PeriodicScalar(u.L, a, u.b, u.parity)


def mean(u: PeriodicScalar) -> float:
    return float(u.a[0])


def differentiate(u: PeriodicScalar) -> PeriodicScalar:
    k = _wavenumbers(u.N, u.L)
    return PeriodicScalar(u.L, k * u.b, -k * u.a, _flip_parity(u.parity))


def antiderivative(u: PeriodicScalar) -> PeriodicScalar:
    """Zero-mean antiderivative, symbol (i k nu)^{-1}."""
    _require_zero_mean(u, "antiderivative")
    k = _wavenumbers(u.N, u.L)
    k[0] = 1.0
    a = -u.b / k
    b = u.a / k
    a[0] = 0.0
    b[0] = 0.0
    return PeriodicScalar(u.L, a, b, _flip_parity(u.parity))


@dataclass(frozen=True, eq=False)
class StripField:
    """Periodic function on R x (-h, 0): x-modes 0..N times a uniform y-grid.

    ``cos[k, j]`` and ``sin[k, j]`` are the mode-k coefficient profiles at
    y_j = -h + j h / M.
    """

    L: float
    h: float
    cos: np.ndarray
    sin: np.ndarray
    parity: str = "even"

    def __post_init__(self):
        c = np.array(self.cos, dtype=float)
        s = np.array(self.sin, dtype=float)
        if c.ndim != 2 or c.shape != s.shape:
            raise ValueError("profile arrays must be 2-d and of equal shape")
        if c.shape[0] < 2 or c.shape[1] < 3:
            raise ValueError("need N >= 1 and M >= 2")
        if self.parity not in ("even", "odd", "none"):
            raise ValueError(f"unknown parity {self.parity!r}")
        s[0] = 0.0
        if self.parity == "even" and np.any(s != 0):
            raise ValueError("even field with nonzero sine profiles")
        if self.parity == "odd" and np.any(c != 0):
            raise ValueError("odd field with nonzero cosine profiles")
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @classmethod
    def zeros(cls, L, h, N, M, parity="even"):
        return cls(L, h, np.zeros((N + 1, M + 1)), np.zeros((N + 1, M + 1)), parity)

    @classmethod
    def even(cls, L, h, cos):
        cos = np.asarray(cos, dtype=float)
        return cls(L, h, cos, np.zeros_like(cos), "even")

    @classmethod
    def from_samples(cls, values, L, h, N, parity="none"):
        """Project samples of shape (M+1, P) onto modes 0..N."""
        a, b = from_grid(np.asarray(values, dtype=float), N)
        if parity == "even":
            b[:] = 0.0
        elif parity == "odd":
            a[:] = 0.0
        return cls(L, h, a.T, b.T, parity)

    @property
    def N(self) -> int:
        return self.cos.shape[0] - 1

    @property
    def M(self) -> int:
        return self.cos.shape[1] - 1

    @property
    def nu(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def y(self) -> np.ndarray:
        return strip_y(self.h, self.M)

    def trace(self, where: str = "top") -> PeriodicScalar:
        j = -1 if where == "top" else 0
        return PeriodicScalar(self.L, self.cos[:, j], self.sin[:, j], self.parity)

    def samples(self, P=None) -> np.ndarray:
        """Values on the (M+1) x P grid (rows are y-levels)."""
        P = collocation_size(self.N) if P is None else P
        return to_grid(self.cos.T, self.sin.T, P)

    def __add__(self, other):
        parity = self.parity if self.parity == other.parity else "none"
        return StripField(self.L, self.h, self.cos + other.cos, self.sin + other.sin, parity)

    def __sub__(self, other):
        parity = self.parity if self.parity == other.parity else "none"
        return StripField(self.L, self.h, self.cos - other.cos, self.sin - other.sin, parity)

    def __mul__(self, c):
        c = float(c)
        return StripField(self.L, self.h, c * self.cos, c * self.sin, self.parity)

    __rmul__ = __mul__


def strip_y(h: float, M: int) -> np.ndarray:
    y = np.linspace(-h, 0.0, M + 1)
    y[0] = -h
    y[-1] = 0.0
    return y


def extension_profiles(N: int, L: float, h: float, y: np.ndarray):
    """Profiles sinh(k nu (y+h))/sinh(k nu h) and k nu cosh(k nu (y+h))/sinh(k nu h).

    Row k = 0 holds (y+h)/h and 1/h, the limits as k -> 0.  The exponential
    form is stable for large k nu h.
    """
    k = _wavenumbers(N, L)[1:, None]
    eta = y[None, :] + h
    e_top = np.exp(-2.0 * k * h)
    scale = np.exp(k * (eta - h)) / (1.0 - e_top)
    e = np.exp(-2.0 * k * eta)
    S = np.empty((N + 1, y.size))
    D = np.empty((N + 1, y.size))
    S[1:] = scale * (1.0 - e)
    D[1:] = k * scale * (1.0 + e)
    S[0] = eta[0] / h
    D[0] = 1.0 / h
    # exact boundary values so traces hold in coefficient space
    S[:, np.asarray(y) == -h] = 0.0
    S[:, np.asarray(y) == 0.0] = 1.0
    return S, D


def harmonic_extension(w: PeriodicScalar, h: float, M: int) -> StripField:
    """V = y + h + sum_k w_k cos(k nu x) sinh(k nu (y+h))/sinh(k nu h)."""
    _require_zero_mean(w, "harmonic_extension")
    if w.parity != "even":
        raise ValueError("harmonic_extension expects an even profile")
    y = strip_y(h, M)
    S, _ = extension_profiles(w.N, w.L, h, y)
    cos = w.a[:, None] * S
    cos[0] = y + h
    return StripField.even(w.L, h, cos)


def surface_gradient(w: PeriodicScalar, h: float) -> tuple[PeriodicScalar, PeriodicScalar]:
    """Trace of grad V on y=0: (w', 1 + C w')."""
    wp = differentiate(w)
    return wp, hilbert_strip(wp, h) + 1.0


def metric_K(w: PeriodicScalar, h: float, P=None) -> PeriodicScalar:
    """K(w) = sqrt((1 + C w')^2 + w'^2), sampled on the collocation grid."""
    P = collocation_size(w.N) if P is None else P
    wp, vy = surface_gradient(w, h)
    s1, s2 = wp.samples(P), vy.samples(P)
    return PeriodicScalar.from_samples(np.hypot(s2, s1), w.L, parity="even" if w.parity == "even" else "none")


def surface_curve(w: PeriodicScalar, h: float, n: int = 256) -> np.ndarray:
    """Samples (X, Y) = (x + C w, w + h) at x_j = j L / n, j = 0..n-1."""
    x = w.L * np.arange(n) / n
    u = project_zero_mean(w)
    cw = hilbert_strip(u, h)
    return np.column_stack([x + to_grid(cw.a, cw.b, n), to_grid(w.a, w.b, n) + h])


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def curve_self_intersects(points: np.ndarray, L: float) -> bool:
    """Proper crossings between non-adjacent segments of a periodic polyline."""
    n = points.shape[0]
    shifted = [points + np.array([s * L, 0.0]) for s in (-1, 0, 1)]
    chain = np.vstack(shifted + [points[:1] + np.array([2 * L, 0.0])])
    starts, ends = chain[:-1], chain[1:]
    centre = np.arange(n, 2 * n)
    p1 = starts[centre][:, None, :]
    p2 = ends[centre][:, None, :]
    cross = _segments_cross(p1, p2, starts[None, :, :], ends[None, :, :])
    idx = np.arange(3 * n)
    near = np.abs(centre[:, None] - idx[None, :]) <= 1
    return bool(np.any(cross & ~near))


def self_intersects(w: PeriodicScalar, h: float, n: int = 512) -> bool:
    """Self-intersection of the surface curve; graphs (1 + C w' > 0) cannot intersect."""
    _, vy = surface_gradient(w, h)
    if np.min(vy.samples(max(n, collocation_size(w.N)))) > 0:
        return False
    return curve_self_intersects(surface_curve(w, h, n), w.L)
