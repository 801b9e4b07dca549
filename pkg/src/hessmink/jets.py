"""Multivariate order-3 jets.

A :class:`Jet3` carries the value, gradient, Hessian and third-derivative tensor
of a scalar function of ``n`` variables at one point.  Arithmetic propagates all
four exactly (truncated Taylor arithmetic), which is what the curvature formulas
need: a finite-difference third derivative would never reach 1e-9 agreement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonSmoothPoint


def _sym_gh(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    """g_i H_jk + g_j H_ik + g_k H_ij."""
    t = np.einsum("i,jk->ijk", g, H)
    return t + t.transpose(1, 0, 2) + t.transpose(1, 2, 0)


def _sym_gh2(a: np.ndarray, B: np.ndarray, b: np.ndarray, A: np.ndarray) -> np.ndarray:
    return _sym_gh(a, B) + _sym_gh(b, A)


@dataclass
class Jet3:
    """Value, gradient, Hessian and third derivative of a scalar at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray

    @property
    def n(self) -> int:
        return len(self.grad)

    @classmethod
    def constant(cls, value: float, n: int) -> "Jet3":
        return cls(float(value), np.zeros(n), np.zeros((n, n)), np.zeros((n, n, n)))

    @classmethod
    def coordinates(cls, y) -> list["Jet3"]:
        y = np.asarray(y, dtype=float)
        n = len(y)
        eye = np.eye(n)
        return [cls(float(y[i]), eye[i].copy(), np.zeros((n, n)), np.zeros((n, n, n))) for i in range(n)]

    # -- arithmetic -----------------------------------------------------
    def _lift(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            return other
        return Jet3.constant(float(other), self.n)

    def __add__(self, other):
        if not isinstance(other, Jet3):
            return Jet3(self.value + float(other), self.grad, self.hess, self.third)
        return Jet3(self.value + other.value, self.grad + other.grad,
                    self.hess + other.hess, self.third + other.third)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(-self.value, -self.grad, -self.hess, -self.third)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet3):
            s = float(other)
            return Jet3(self.value * s, self.grad * s, self.hess * s, self.third * s)
        u, v = self, other
        gu, gv = u.grad, v.grad
        cross = np.outer(gu, gv)
        hess = u.value * v.hess + v.value * u.hess + cross + cross.T
        third = (u.value * v.third + v.value * u.third
                 + _sym_gh2(gu, v.hess, gv, u.hess))
        return Jet3(u.value * v.value, u.value * gv + v.value * gu, hess, third)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet3):
            return self * (1.0 / float(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def compose(self, d0: float, d1: float, d2: float, d3: float) -> "Jet3":
        """Chain rule for a scalar function with derivatives d0..d3 at ``value``."""
        g = self.grad
        hess = d2 * np.outer(g, g) + d1 * self.hess
        third = (d3 * np.einsum("i,j,k->ijk", g, g, g)
                 + d2 * _sym_gh(g, self.hess) + d1 * self.third)
        return Jet3(float(d0), d1 * g, hess, third)

    def reciprocal(self) -> "Jet3":
        x = self.value
        if x == 0.0:
            raise ZeroDivisionError("jet division by zero")
        return self.compose(1 / x, -1 / x**2, 2 / x**3, -6 / x**4)

    def __pow__(self, p):
        p = float(p)
        x = self.value
        if p == int(p):
            if p == 0:
                return Jet3.constant(1.0, self.n)
            if p < 0 and x == 0.0:
                raise ZeroDivisionError("negative power of zero")
            # x**(p-3) may be undefined at 0 even though its coefficient vanishes
            def pw(e):
                return 0.0 if e < 0 and x == 0.0 else x**e
            return self.compose(x**p, p * pw(p - 1), p * (p - 1) * pw(p - 2),
                                p * (p - 1) * (p - 2) * pw(p - 3))
        if x <= 0.0:
            raise NonSmoothPoint(f"non-integer power {p} of non-positive value {x}")
        return self.compose(x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2),
                            p * (p - 1) * (p - 2) * x ** (p - 3))

    def sqrt(self) -> "Jet3":
        if self.value <= 0.0:
            raise NonSmoothPoint("sqrt is not smooth at 0")
        return self**0.5

    def atan(self) -> "Jet3":
        x = self.value
        q = 1.0 + x * x
        return self.compose(math.atan(x), 1 / q, -2 * x / q**2, (6 * x * x - 2) / q**3)


def atan2(w: Jet3, u: Jet3) -> Jet3:
    """Angle of (u, w) as a jet, continued smoothly from its base value."""
    u0, w0 = u.value, w.value
    base = math.atan2(w0, u0)
    return ((w * u0 - u * w0) / (u * u0 + w * w0)).atan() + base


def norm_sq(jets: list[Jet3]) -> Jet3:
    out = jets[0] * jets[0]
    for j in jets[1:]:
        out = out + j * j
    return out
