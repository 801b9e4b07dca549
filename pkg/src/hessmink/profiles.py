"""Profile functions f(t) with E = r^2 f(t) for block-rotation-invariant norms.

Every profile exposes :meth:`ProfileFunction.series` (Taylor coefficients at a
point, any order the representation supports) and the vectorised
:meth:`ProfileFunction.derivatives`.  Three representations are provided:
trigonometric polynomials (closed-form derivatives), smooth compactly
supported bumps on a constant background, and quintic splines through
tabulated values.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from .taylor import Series

TWO_PI = 2.0 * math.pi


class ProfileFunction:
    """Abstract profile.  Subclasses override ``series`` or ``derivatives``."""

    period: float = TWO_PI

    def series(self, t: float, order: int) -> Series:
        return Series.from_derivatives(self.derivatives(float(t), order))

    def derivatives(self, t, order: int = 3) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.empty((order + 1,) + t.shape)
        for idx in np.ndindex(t.shape):
            out[(slice(None),) + idx] = self.series(float(t[idx]), order).derivatives()
        return out

    def __call__(self, t):
        return self.derivatives(t, 0)[0]

    def validate(self, samples: int = 721) -> list[str]:
        """Return a list of violated profile invariants (empty when valid)."""
        problems = []
        ts = np.linspace(0.0, self.period, samples)
        vals = self(ts)
        if np.any(vals <= 0.0):
            problems.append("profile is not positive on its period")
        if not np.allclose(self(-ts), vals, rtol=1e-12, atol=1e-14):
            problems.append("profile is not even")
        if not np.allclose(self(ts + self.period), vals, rtol=1e-10, atol=1e-12):
            problems.append("profile is not periodic with the declared period")
        return problems


class TrigProfile(ProfileFunction):
    """f(t) = sum_m cos[m] cos(m t) + sin[m] sin(m t).

    ``cos[0]`` is the constant term; ``sin[0]`` is ignored.  ``period`` is
    either 2*pi or pi; in the latter case odd harmonics must vanish.
    """

    def __init__(self, cos: Sequence[float], sin: Sequence[float] = (), period: float = TWO_PI):
        m = max(len(cos), len(sin))
        self.a = np.zeros(m)
        self.b = np.zeros(m)
        self.a[: len(cos)] = cos
        self.b[: len(sin)] = sin
        self.b[0] = 0.0
        if not (math.isclose(period, TWO_PI) or math.isclose(period, math.pi)):
            raise ValueError("period must be pi or 2*pi")
        self.period = period
        if math.isclose(period, math.pi) and (np.any(self.a[1::2] != 0) or np.any(self.b[1::2] != 0)):
            raise ValueError("odd harmonics are incompatible with period pi")

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    def derivatives(self, t, order: int = 3) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        m = np.arange(len(self.a)).reshape((-1,) + (1,) * t.ndim)
        phase = m * t
        out = np.empty((order + 1,) + t.shape)
        for j in range(order + 1):
            shift = j * math.pi / 2.0
            scale = m.astype(float) ** j
            terms = (self.a.reshape(m.shape) * np.cos(phase + shift)
                     + self.b.reshape(m.shape) * np.sin(phase + shift))
            out[j] = np.sum(scale * terms, axis=0)
        return out

    def series(self, t: float, order: int) -> Series:
        return Series.from_derivatives(self.derivatives(float(t), order))

    def to_json(self) -> dict:
        return {"cos": self.a.tolist(), "sin": self.b.tolist(),
                "period": "pi" if math.isclose(self.period, math.pi) else "2pi"}

    def __repr__(self) -> str:
        return f"TrigProfile(cos={self.a.tolist()}, sin={self.b.tolist()})"


def _bump_series(s: Series) -> Series:
    """exp(1 - 1/(1 - s^2)) on |s| < 1, identically zero outside."""
    if abs(s.value) >= 1.0:
        return Series.constant(0.0, s.order)
    return (1.0 - 1.0 / (1.0 - s * s)).exp()


class BumpProfile(ProfileFunction):
    """A constant background plus smooth compactly supported bumps.

    Each bump is ``(center, halfwidth, amplitude)`` and contributes
    ``amplitude * exp(1 - 1/(1 - s^2))`` with ``s = (t - center)/halfwidth``;
    the peak value is ``amplitude``.  Supports must sit inside ``(0, period/2)``
    and the profile is extended evenly and periodically.
    """

    def __init__(self, base: float, bumps: Sequence[tuple[float, float, float]] = (),
                 period: float = TWO_PI):
        self.base = float(base)
        self.bumps = tuple((float(c), float(w), float(a)) for c, w, a in bumps)
        self.period = period
        half = period / 2.0
        for c, w, _ in self.bumps:
            if w <= 0 or c - w < 0.0 or c + w > half:
                raise ValueError(f"bump support ({c - w}, {c + w}) leaves (0, {half})")

    def _reduce(self, t: float) -> tuple[float, float]:
        p = self.period
        u = math.remainder(t, p)  # in [-p/2, p/2]
        return (u, 1.0) if u >= 0.0 else (-u, -1.0)

    def series(self, t: float, order: int) -> Series:
        u, sign = self._reduce(float(t))
        x = Series.variable(u, order)
        out = Series.constant(self.base, order)
        for c, w, a in self.bumps:
            out = out + _bump_series((x - c) / w) * a
        if sign < 0:
            out = Series(out.c * (-1.0) ** np.arange(order + 1))
        return out

    def supports(self) -> list[tuple[float, float]]:
        return [(c - w, c + w) for c, w, _ in self.bumps]

    def to_json(self) -> dict:
        return {"base": self.base, "bumps": [list(b) for b in self.bumps],
                "period": "pi" if math.isclose(self.period, math.pi) else "2pi"}

    def __repr__(self) -> str:
        return f"BumpProfile(base={self.base}, bumps={list(self.bumps)})"


class SplineProfile(ProfileFunction):
    """Quintic interpolating spline through tabulated (t, f) values.

    Only meaningful on the tabulated interval; derivatives up to order 4.
    """

    def __init__(self, t, values, period: float = TWO_PI):
        t = np.asarray(t, dtype=float)
        self.lo, self.hi = float(t[0]), float(t[-1])
        self.period = period
        self._spl = make_interp_spline(t, np.asarray(values, dtype=float), k=5)

    def derivatives(self, t, order: int = 3) -> np.ndarray:
        if order > 4:
            raise ValueError("spline profiles provide derivatives up to order 4")
        t = np.asarray(t, dtype=float)
        return np.stack([self._spl(t, nu=j) for j in range(order + 1)])

    def validate(self, samples: int = 721) -> list[str]:
        ts = np.linspace(self.lo, self.hi, samples)
        return [] if np.all(self(ts) > 0) else ["profile is not positive on its table"]
