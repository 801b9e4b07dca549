"""Univariate truncated Taylor series.

A :class:`Series` stores the Taylor coefficients ``c[k] = u^(k)(t0) / k!`` of a
scalar function around a base point.  Arithmetic follows the usual coefficient
recurrences, so derivatives of arbitrary order come out exact up to rounding.
It is the workhorse behind profile derivatives and the theta-maps of the
isometry module.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class Series:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    # -- construction ---------------------------------------------------
    @classmethod
    def variable(cls, t0: float, order: int) -> "Series":
        c = np.zeros(order + 1)
        c[0] = t0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value: float, order: int) -> "Series":
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs: Sequence[float]) -> "Series":
        d = np.asarray(derivs, dtype=float)
        fact = np.array([math.factorial(k) for k in range(len(d))], dtype=float)
        return cls(d / fact)

    @property
    def order(self) -> int:
        return len(self.c) - 1

    @property
    def value(self) -> float:
        return float(self.c[0])

    def derivatives(self) -> np.ndarray:
        fact = np.array([math.factorial(k) for k in range(len(self.c))], dtype=float)
        return self.c * fact

    def derivative(self) -> "Series":
        """Series of d/dt, one order shorter."""
        k = np.arange(1, len(self.c))
        return Series(self.c[1:] * k)

    def truncate(self, order: int) -> "Series":
        return Series(self.c[: order + 1].copy())

    def __repr__(self) -> str:
        return f"Series({self.c.tolist()})"

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            if other.order != self.order:
                n = min(self.order, other.order)
                return other.truncate(n)
            return other
        return Series.constant(float(other), self.order)

    def _match(self, other):
        other = self._coerce(other)
        n = min(self.order, other.order)
        return self.c[: n + 1], other.c[: n + 1]

    def __add__(self, other):
        a, b = self._match(other)
        return Series(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._match(other)
        return Series(a - b)

    def __rsub__(self, other):
        a, b = self._match(other)
        return Series(b - a)

    def __neg__(self):
        return Series(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Series):
            return Series(self.c * float(other))
        a, b = self._match(other)
        n = len(a)
        return Series(np.convolve(a, b)[:n])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Series):
            return Series(self.c / float(other))
        a, b = self._match(other)
        if b[0] == 0.0:
            raise ZeroDivisionError("series division by a series with zero constant term")
        n = len(a)
        q = np.zeros(n)
        for k in range(n):
            q[k] = (a[k] - np.dot(q[:k], b[k:0:-1])) / b[0]
        return Series(q)

    def __rtruediv__(self, other):
        return Series.constant(float(other), self.order) / self

    def __pow__(self, p):
        p = float(p)
        if p == int(p) and p >= 0:
            out = Series.constant(1.0, self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        x = self.c
        if x[0] <= 0.0:
            raise ValueError("non-integer power of a series with non-positive constant term")
        n = len(x)
        y = np.zeros(n)
        y[0] = x[0] ** p
        for k in range(1, n):
            j = np.arange(1, k + 1)
            y[k] = np.sum((p * j - (k - j)) * x[j] * y[k - j]) / (k * x[0])
        return Series(y)

    # -- elementary functions -------------------------------------------
    def sqrt(self) -> "Series":
        return self ** 0.5

    def exp(self) -> "Series":
        x = self.c
        n = len(x)
        y = np.zeros(n)
        y[0] = math.exp(x[0])
        for k in range(1, n):
            j = np.arange(1, k + 1)
            y[k] = np.sum(j * x[j] * y[k - j]) / k
        return Series(y)

    def log(self) -> "Series":
        x = self.c
        if x[0] <= 0.0:
            raise ValueError("log of a series with non-positive constant term")
        n = len(x)
        y = np.zeros(n)
        y[0] = math.log(x[0])
        for k in range(1, n):
            j = np.arange(1, k)
            y[k] = (k * x[k] - np.sum(j * y[j] * x[k - j])) / (k * x[0])
        return Series(y)

    def sincos(self) -> tuple["Series", "Series"]:
        x = self.c
        n = len(x)
        s = np.zeros(n)
        c = np.zeros(n)
        s[0], c[0] = math.sin(x[0]), math.cos(x[0])
        for k in range(1, n):
            j = np.arange(1, k + 1)
            s[k] = np.sum(j * x[j] * c[k - j]) / k
            c[k] = -np.sum(j * x[j] * s[k - j]) / k
        return Series(s), Series(c)

    def sin(self) -> "Series":
        return self.sincos()[0]

    def cos(self) -> "Series":
        return self.sincos()[1]

    def _integrate(self, const: float) -> "Series":
        k = np.arange(1, len(self.c) + 1)
        return Series(np.concatenate([[const], self.c / k]))

    def atan(self) -> "Series":
        if self.order == 0:
            return Series([math.atan(self.c[0])])
        d = self.derivative() / (1.0 + self.truncate(self.order - 1) ** 2)
        return d._integrate(math.atan(self.c[0]))

    def compose(self, derivs: Sequence[float]) -> "Series":
        """Apply a scalar function given its derivatives at the base value."""
        n = self.order
        if len(derivs) < n + 1:
            raise ValueError(f"need {n + 1} derivatives, got {len(derivs)}")
        delta = Series(np.concatenate([[0.0], self.c[1:]]))
        out = Series.constant(float(derivs[0]), n)
        power = Series.constant(1.0, n)
        for k in range(1, n + 1):
            power = power * delta
            out = out + power * (derivs[k] / math.factorial(k))
        return out


def atan2(w: Series, u: Series) -> Series:
    """Angle of the point (u, w), continued smoothly from its base value."""
    base = math.atan2(w.value, u.value)
    u0, w0 = u.value, w.value
    return (((w * u0) - (u * w0)) / ((u * u0) + (w * w0))).atan() + base
