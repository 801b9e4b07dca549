"""Minkowski norm models and their exact order-3 derivative engine.

Every norm is described by E = F^2/2.  A :class:`NormSpec` evaluates E and its
:class:`~hessmink.jets.Jet3` (value, gradient, Hessian, third derivative):
closed forms for Euclidean and Randers norms, jet arithmetic for profile and
expression norms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import sexpr
from .errors import NonSmoothPoint, OutOfCone, SpecError, ZeroPoint
from .jets import Jet3, atan2, norm_sq
from .profiles import ProfileFunction

HOMOGENEITY_RTOL = 1e-10


def as_point(y, n: Optional[int] = None) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ValueError("a point is a vector of at least 2 coordinates")
    if n is not None and len(y) != n:
        raise ValueError(f"expected a point in R^{n}, got R^{len(y)}")
    if not np.all(np.isfinite(y)):
        raise ValueError("point has non-finite coordinates")
    if not np.any(y):
        raise ZeroPoint("the origin is excluded")
    return y


def orbit_coordinates(y: np.ndarray, k: int) -> tuple[float, float, float]:
    """(u, w, t) with w = |x''| and t = atan2(w, u).

    For k = 1, u = x1 is signed and t ranges over [0, pi]; for k > 1,
    u = |x'| and t ranges over [0, pi/2].
    """
    u = float(y[0]) if k == 1 else float(np.linalg.norm(y[:k]))
    w = float(np.linalg.norm(y[k:]))
    return u, w, math.atan2(w, u)


class NormSpec:
    """Base class.  Subclasses implement ``_E`` and ``_jet3`` on valid points."""

    kind = "abstract"
    n: int

    def in_cone(self, y: np.ndarray) -> bool:
        return True

    def _E(self, y: np.ndarray) -> float:
        raise NotImplementedError

    def _jet3(self, y: np.ndarray) -> Jet3:
        raise NotImplementedError

    def _checked(self, y) -> np.ndarray:
        y = as_point(y, self.n)
        if not self.in_cone(y):
            raise OutOfCone(f"{y} lies outside the validity cone of this {self.kind} norm")
        return y

    def E(self, y) -> float:
        return self._E(self._checked(y))

    def F(self, y) -> float:
        return math.sqrt(2.0 * self.E(y))

    def jet3(self, y) -> Jet3:
        return self._jet3(self._checked(y))

    def hess(self, y) -> np.ndarray:
        return self.jet3(y).hess


@dataclass(eq=False)
class Euclidean(NormSpec):
    """E = y^T A y / 2 for a symmetric positive-definite A."""

    A: np.ndarray
    kind = "euclidean"

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise SpecError("A must be square")
        if not np.allclose(self.A, self.A.T, rtol=0, atol=1e-12 * np.abs(self.A).max()):
            raise SpecError("A must be symmetric")
        self.A = 0.5 * (self.A + self.A.T)
        if np.linalg.eigvalsh(self.A)[0] <= 0.0:
            raise SpecError("A must be positive definite")
        self.n = self.A.shape[0]

    def _E(self, y):
        return 0.5 * float(y @ self.A @ y)

    def _jet3(self, y):
        n = self.n
        Ay = self.A @ y
        return Jet3(0.5 * float(y @ Ay), Ay, self.A.copy(), np.zeros((n, n, n)))


@dataclass(eq=False)
class Randers(NormSpec):
    """F = sqrt(y^T alpha y) + beta . y with |beta|_alpha < 1."""

    alpha: np.ndarray
    beta: np.ndarray
    kind = "randers"

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        self.n = self.alpha.shape[0]
        if self.alpha.shape != (self.n, self.n) or self.beta.shape != (self.n,):
            raise SpecError("alpha must be n x n and beta an n-vector")
        self.alpha = 0.5 * (self.alpha + self.alpha.T)
        if np.linalg.eigvalsh(self.alpha)[0] <= 0.0:
            raise SpecError("alpha must be positive definite")
        if self.beta_norm() >= 1.0:
            raise SpecError("Randers data needs |beta|_alpha < 1")

    def beta_norm(self) -> float:
        return math.sqrt(float(self.beta @ np.linalg.solve(self.alpha, self.beta)))

    def _E(self, y):
        F = math.sqrt(float(y @ self.alpha @ y)) + float(self.beta @ y)
        return 0.5 * F * F

    def _jet3(self, y):
        Ay = self.alpha @ y
        a = math.sqrt(float(y @ Ay))
        a1 = Ay / a
        a2 = (self.alpha - np.outer(a1, a1)) / a
        t = np.einsum("i,jk->ijk", a1, a2)
        a3 = -(t + t.transpose(1, 0, 2) + t.transpose(1, 2, 0)) / a
        F = a + float(self.beta @ y)
        F1 = a1 + self.beta
        t = np.einsum("i,jk->ijk", F1, a2)
        third = t + t.transpose(1, 0, 2) + t.transpose(1, 2, 0) + F * a3
        return Jet3(0.5 * F * F, F * F1, np.outer(F1, F1) + F * a2, third)


@dataclass(eq=False)
class ProfileNorm(NormSpec):
    """SO(k) x SO(n-k)-invariant norm with E = r^2 f(t) in spherical coordinates.

    ``band`` optionally restricts the validity cone to orbit angles
    ``band[0] < t < band[1]``.  ``strict=False`` skips the evenness/period
    checks on ``f`` (used for deliberately singular profiles).
    """

    k: int
    n: int
    f: ProfileFunction
    band: Optional[tuple[float, float]] = None
    strict: bool = True
    kind = "profile"

    def __post_init__(self):
        if self.n < 3 or not 1 <= self.k <= self.n // 2:
            raise SpecError("profile norms need n >= 3 and 1 <= k <= n/2")
        if self.strict:
            problems = self.f.validate()
            if problems:
                raise SpecError("; ".join(problems))
            want = 2 * math.pi if self.k == 1 else math.pi
            if not math.isclose(self.f.period, want) and not (
                self.k == 1 and math.isclose(self.f.period, math.pi)
            ):
                raise SpecError(f"k={self.k} needs a profile of period {want}")

    def angle(self, y: np.ndarray) -> float:
        return orbit_coordinates(y, self.k)[2]

    def in_cone(self, y):
        if self.band is None:
            return True
        t = self.angle(y)
        return self.band[0] < t < self.band[1]

    def _E(self, y):
        _, _, t = orbit_coordinates(y, self.k)
        return float(y @ y) * float(self.f(t))

    def _jet3(self, y):
        xs = Jet3.coordinates(y)
        k = self.k
        u = xs[0] if k == 1 else norm_sq(xs[:k]).sqrt()
        w = norm_sq(xs[k:])
        if w.value == 0.0:
            raise NonSmoothPoint("the spherical chart degenerates on the symmetry axis")
        t = atan2(w.sqrt(), u)
        ft = t.compose(*self.f.derivatives(t.value, 3))
        return norm_sq(xs) * ft


@dataclass(eq=False)
class ExpressionNorm(NormSpec):
    """E given by a prefix s-expression in x1..xn.

    ``cone`` is an optional list of linear functionals c; the validity cone is
    {y : c . y > 0 for all c}.
    """

    expr: str
    n: int
    cone: Optional[Sequence[Sequence[float]]] = None
    check: bool = True
    tree: tuple = field(init=False, repr=False)
    kind = "expression"

    def __post_init__(self):
        self.tree = sexpr.parse(self.expr)
        if sexpr.max_variable(self.tree) > self.n:
            raise SpecError(f"expression uses variables beyond x{self.n}")
        if self.cone is not None:
            self.cone = np.atleast_2d(np.asarray(self.cone, dtype=float))
            if self.cone.shape[1] != self.n:
                raise SpecError("cone functionals must have n entries")
        if self.check:
            rng = np.random.default_rng(0)
            pts = [p for p in rng.standard_normal((64, self.n)) if self.in_cone(p)]
            err = homogeneity_error(self, pts[:16], rng.uniform(0.1, 10.0, 16))
            if err > HOMOGENEITY_RTOL:
                raise SpecError(f"expression is not positively 2-homogeneous (rel. err {err:.2e})")

    def in_cone(self, y):
        if self.cone is None:
            return True
        return bool(np.all(self.cone @ y > 0.0))

    def _E(self, y):
        return float(sexpr.evaluate(self.tree, [float(v) for v in y]))

    def _jet3(self, y):
        return sexpr.evaluate(self.tree, Jet3.coordinates(y), sqrt=lambda j: j.sqrt()
                              if isinstance(j, Jet3) else _jet_free_sqrt(j))


def _jet_free_sqrt(x: float) -> float:
    if x <= 0:
        raise NonSmoothPoint("sqrt of a non-positive constant")
    return math.sqrt(x)


# -- module-level operations -----------------------------------------------


def eval_E(spec: NormSpec, y) -> float:
    return spec.E(y)


def jet3(spec: NormSpec, y) -> Jet3:
    return spec.jet3(y)


@dataclass
class ConvexityReport:
    min_eigenvalue: float
    failures: list = field(default_factory=list)  # (point, min eigenvalue) pairs
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures


def check_strong_convexity(spec: NormSpec, samples: Iterable) -> ConvexityReport:
    """Smallest Hessian eigenvalue of E over ``samples`` plus the violating points."""
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample point")
    lowest = math.inf
    failures = []
    for y in samples:
        lam = float(np.linalg.eigvalsh(spec.hess(y))[0])
        lowest = min(lowest, lam)
        if not lam > 0.0:
            failures.append((np.asarray(y, dtype=float), lam))
    return ConvexityReport(lowest, failures, len(samples))


def homogeneity_error(spec: NormSpec, samples, lambdas) -> float:
    """max |E(l y) - l^2 E(y)| / (l^2 E(y)) over paired samples and scales."""
    worst = 0.0
    for y, lam in zip(samples, lambdas):
        e = spec.E(y)
        worst = max(worst, abs(spec.E(lam * np.asarray(y)) - lam**2 * e) / (lam**2 * abs(e)))
    return worst


def euler_residuals(j: Jet3, y) -> tuple[float, float, float]:
    """Relative residuals of grad.y = 2E, hess y = grad, third(y, ., .) = 0."""
    y = np.asarray(y, dtype=float)
    r1 = abs(j.grad @ y - 2 * j.value) / abs(2 * j.value)
    r2 = np.abs(j.hess @ y - j.grad).max() / (np.abs(j.grad).max())
    scale = np.abs(j.hess).max() / np.linalg.norm(y)
    r3 = np.abs(np.einsum("ijk,k->ij", j.third, y)).max() / scale
    return float(r1), float(r2), float(r3)


def sample_points(spec: NormSpec, count: int, rng: np.random.Generator,
                  max_tries: int = 10000) -> list[np.ndarray]:
    """Random Gaussian points inside the validity cone of ``spec``."""
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise OutOfCone("could not sample enough points inside the validity cone")
        y = rng.standard_normal(spec.n)
        if spec.in_cone(y):
            out.append(y)
    return out
