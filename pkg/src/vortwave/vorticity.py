"""Vorticity functions gamma(psi) with first and second derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels

# Kernel codes understood by the compiled backend.
CONSTANT, AFFINE, SINE, TABLE, CALLABLE = 0, 1, 2, 3, -1


@dataclass(frozen=True, eq=False)
class VorticityModel:
    """A globally Lipschitz vorticity function.

    Use the constructors ``constant``, ``affine``, ``sine``, ``table`` or
    ``custom``.  ``kind`` is one of ``constant``, ``affine`` or ``custom``.
    """

    kind: str
    code: int
    params: np.ndarray
    lipschitz_bound: float | None = None
    funcs: tuple[Callable, Callable, Callable] | None = field(default=None, repr=False)
    description: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, gamma0: float = 0.0) -> VorticityModel:
        return cls("constant", CONSTANT, np.array([float(gamma0)]), 0.0,
                   description={"kind": "constant", "gamma0": float(gamma0)})

    @classmethod
    def zero(cls) -> VorticityModel:
        return cls.constant(0.0)

    @classmethod
    def affine(cls, a: float, b: float) -> VorticityModel:
        return cls("affine", AFFINE, np.array([float(a), float(b)]), abs(float(a)),
                   description={"kind": "affine", "a": float(a), "b": float(b)})

    @classmethod
    def sine(cls, amplitude=1.0, frequency=1.0, phase=0.0, offset=0.0) -> VorticityModel:
        """gamma(s) = amplitude * sin(frequency * s + phase) + offset."""
        p = np.array([amplitude, frequency, phase, offset], dtype=float)
        return cls("custom", SINE, p, abs(p[0] * p[1]),
                   description={"kind": "sine", "amplitude": p[0], "frequency": p[1],
                                "phase": p[2], "offset": p[3]})

    @classmethod
    def table(cls, knots, coefficients) -> VorticityModel:
        """Piecewise cubic: on [x_i, x_{i+1}], sum_j c_ij (s - x_i)^j; linear beyond the ends.

        ``coefficients`` has shape (n, 4) for n + 1 knots.
        """
        knots = np.asarray(knots, dtype=float)
        coef = np.asarray(coefficients, dtype=float)
        n = knots.size - 1
        if n < 1 or coef.shape != (n, 4):
            raise ValueError("table needs n+1 knots and an (n, 4) coefficient array")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("table knots must be strictly increasing")
        params = np.concatenate([[n], knots, coef.ravel()])
        t = np.linspace(0.0, 1.0, 33)
        slopes = []
        for i in range(n):
            dt = (knots[i + 1] - knots[i]) * t
            slopes.append(coef[i, 1] + dt * (2 * coef[i, 2] + 3 * coef[i, 3] * dt))
        return cls("custom", TABLE, params, float(np.max(np.abs(slopes))),
                   description={"kind": "table", "knots": knots.tolist(),
                                "coefficients": coef.tolist()})

    @classmethod
    def custom(cls, gamma, dgamma, d2gamma, lipschitz_bound=None) -> VorticityModel:
        """Arbitrary vectorized callables; these always run on the Python kernels."""
        return cls("custom", CALLABLE, np.zeros(0), lipschitz_bound, (gamma, dgamma, d2gamma),
                   description={"kind": "callable"})

    def _eval(self, s, order):
        s = np.asarray(s, dtype=float)
        if self.code == CALLABLE:
            return np.broadcast_to(np.asarray(self.funcs[order](s), dtype=float), s.shape).copy()
        if self.code == CONSTANT:
            return np.full(s.shape, self.params[0] if order == 0 else 0.0)
        if self.code == AFFINE:
            a, b = self.params
            return a * s + b if order == 0 else np.full(s.shape, a if order == 1 else 0.0)
        if self.code == SINE:
            amp, fr, ph, off = self.params
            arg = fr * s + ph
            return (amp * np.sin(arg) + off, amp * fr * np.cos(arg), -amp * fr * fr * np.sin(arg))[order]
        flat = s.ravel()
        if kernels.ext is not None:
            vals = kernels.ext.gamma_eval(self.code, self.params, np.ascontiguousarray(flat))
        else:
            vals = kernels.py.gamma_eval(self.code, self.params, flat)
        return vals[order].reshape(s.shape)

    def gamma(self, s):
        return self._eval(s, 0)

    def dgamma(self, s):
        return self._eval(s, 1)

    def d2gamma(self, s):
        return self._eval(s, 2)

    __call__ = gamma

    @property
    def is_zero(self) -> bool:
        return self.code == CONSTANT and self.params[0] == 0.0

    @property
    def linear_in_field(self) -> bool:
        """True when gamma' is identically zero, so A does not depend on phi."""
        return self.code == CONSTANT

    def derivative_range(self, lo: float, hi: float, n: int = 2001) -> tuple[float, float]:
        """(inf, sup) of gamma' over [lo, hi], by sampling plus exact endpoints."""
        if self.code == CONSTANT:
            return 0.0, 0.0
        if self.code == AFFINE:
            return float(self.params[0]), float(self.params[0])
        s = np.linspace(lo, hi, n)
        d = self.dgamma(s)
        return float(np.min(d)), float(np.max(d))

    def to_dict(self) -> dict:
        if self.code == CALLABLE:
            raise ValueError("callable vorticity models cannot be serialized")
        return dict(self.description)

    @classmethod
    def from_dict(cls, d: dict) -> VorticityModel:
        kind = d.get("kind")
        if kind == "constant":
            return cls.constant(float(d.get("gamma0", 0.0)))
        if kind == "zero":
            return cls.zero()
        if kind == "affine":
            return cls.affine(float(d["a"]), float(d["b"]))
        if kind == "sine":
            return cls.sine(float(d.get("amplitude", 1.0)), float(d.get("frequency", 1.0)),
                            float(d.get("phase", 0.0)), float(d.get("offset", 0.0)))
        if kind in ("table", "custom"):
            return cls.table(d["knots"], d["coefficients"])
        raise KeyError(f"unknown vorticity kind {kind!r}")
