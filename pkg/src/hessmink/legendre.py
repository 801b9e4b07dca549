"""Legendre transformation, dual norms, and Hessian-isometry verification.

The Legendre map of a norm is Phi = grad E.  Its differential is g, and the
dual norm E^(p) = E(Phi^{-1}(p)) has Hessian g^{-1} at Phi(y), so Phi pulls
the dual Hessian metric back to the original one.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import HessminkError, InversionFailure, NotPositiveDefinite, OutOfCone
from .jets import Jet3
from .norms import NormSpec, as_point

NEWTON_MAX_ITER = 50


def legendre_map(spec: NormSpec, y) -> np.ndarray:
    """Phi(y) = grad E(y)."""
    return spec.jet3(y).grad


def invert_legendre(spec: NormSpec, p, tol: float = 1e-14) -> np.ndarray:
    """Solve grad E(x) = p by damped Newton on the convex function E(x) - p.x.

    The start is the radial point x0 = s p/|p| with s chosen so that
    |Phi(x0)| = |p|.  Backtracking keeps every iterate inside the validity cone.
    """
    p = as_point(p)
    pn = float(np.linalg.norm(p))
    u = p / pn
    if not spec.in_cone(u):
        raise InversionFailure("radial start point lies outside the validity cone")
    x = u * pn / float(np.linalg.norm(spec.jet3(u).grad))

    def objective(z):
        return spec.E(z) - float(p @ z)

    for _ in range(NEWTON_MAX_ITER):
        j = spec.jet3(x)
        r = j.grad - p
        if np.linalg.norm(r) <= tol * pn:
            return x
        try:
            step = np.linalg.solve(j.hess, r)
        except np.linalg.LinAlgError:
            raise InversionFailure("singular Hessian during Newton inversion") from None
        f0 = j.value - float(p @ x)
        decrease = float(r @ step)
        lam = 1.0
        while True:
            cand = x - lam * step
            if np.any(cand) and spec.in_cone(cand):
                try:
                    # slack absorbs rounding once the decrease is below machine precision
                    if objective(cand) <= f0 - 1e-4 * lam * decrease + 1e-14 * abs(f0):
                        break
                except HessminkError:
                    pass
            lam *= 0.5
            if lam < 1e-12:
                raise InversionFailure("line search failed: p may lie outside the image cone")
        x = cand
    j = spec.jet3(x)
    if np.linalg.norm(j.grad - p) <= 1e3 * tol * pn:
        return x
    raise InversionFailure(f"Newton inversion of the Legendre map did not converge in {NEWTON_MAX_ITER} iterations")


class DualNorm(NormSpec):
    """E^(p) = E(x*) with grad E(x*) = p, carrying the full order-3 derivative contract.

    grad E^ = x*, hess E^ = g(x*)^{-1} and
    third E^_ijk = -E'''_abc hg_ia hg_jb hg_kc with hg = g(x*)^{-1}.
    """

    kind = "dual"

    def __init__(self, base: NormSpec, cache_size: int = 256):
        self.base = base
        self.n = base.n
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = cache_size

    def preimage(self, p) -> np.ndarray:
        p = as_point(p, self.n)
        key = p.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        x = invert_legendre(self.base, p)
        self._cache[key] = x
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return x

    def _E(self, p):
        return 0.5 * float(p @ self.preimage(p))

    def _jet3(self, p):
        x = self.preimage(p)
        j = self.base.jet3(x)
        try:
            hg = np.linalg.inv(j.hess)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("base Hessian is singular at the preimage") from None
        third = -np.einsum("abc,ia,jb,kc->ijk", j.third, hg, hg, hg)
        return Jet3(0.5 * float(p @ x), x.copy(), hg, third)


def dual_norm(spec: NormSpec) -> NormSpec:
    """Dual norm; closed form for Euclidean data, Newton-based otherwise."""
    from .norms import Euclidean

    if isinstance(spec, DualNorm):
        return spec.base
    if isinstance(spec, Euclidean):
        return Euclidean(np.linalg.inv(spec.A))
    return DualNorm(spec)


# -- maps -------------------------------------------------------------------


class PointMap:
    """A map R^n -> R^n with a Jacobian."""

    def __call__(self, y) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, y) -> np.ndarray:
        return fd_jacobian(self, y)


def fd_jacobian(fn: Callable, y, rel_step: float = 1e-6) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    h = rel_step * float(np.linalg.norm(y))
    cols = []
    for i in range(len(y)):
        e = np.zeros(len(y))
        e[i] = h
        cols.append((np.asarray(fn(y + e)) - np.asarray(fn(y - e))) / (2 * h))
    return np.stack(cols, axis=1)


@dataclass
class LinearMap(PointMap):
    M: np.ndarray

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)

    def __call__(self, y):
        return self.M @ np.asarray(y, dtype=float)

    def jacobian(self, y):
        return self.M


@dataclass
class LegendreMap(PointMap):
    spec: NormSpec

    def __call__(self, y):
        return self.spec.jet3(y).grad

    def jacobian(self, y):
        return self.spec.jet3(y).hess


@dataclass
class FunctionMap(PointMap):
    """Wraps a callable; falls back to central differences (step 1e-6 |y|) for the Jacobian."""

    fn: Callable
    jac: Optional[Callable] = None

    def __call__(self, y):
        return np.asarray(self.fn(np.asarray(y, dtype=float)), dtype=float)

    def jacobian(self, y):
        if self.jac is not None:
            return np.asarray(self.jac(np.asarray(y, dtype=float)), dtype=float)
        return fd_jacobian(self, y)


@dataclass
class ComposedMap(PointMap):
    """outer o inner."""

    outer: PointMap
    inner: PointMap

    def __call__(self, y):
        return self.outer(self.inner(y))

    def jacobian(self, y):
        z = self.inner(y)
        return self.outer.jacobian(z) @ self.inner.jacobian(y)


@dataclass
class MapSample:
    source: np.ndarray
    image: np.ndarray
    jacobian: np.ndarray

    @classmethod
    def of(cls, m: PointMap, y) -> "MapSample":
        y = np.asarray(y, dtype=float)
        return cls(y, m(y), m.jacobian(y))


@dataclass
class IsometryReport:
    residuals: list = field(default_factory=list)
    samples: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def ok(self, tol: float) -> bool:
        return self.max_residual <= tol

    def to_json(self) -> dict:
        return {"max_residual": self.max_residual, "residuals": list(self.residuals),
                "samples": [np.asarray(s).tolist() for s in self.samples]}


def pullback_residual(m: PointMap, specA: NormSpec, specB: NormSpec, y) -> float:
    """|J^T g_B(m(y)) J - g_A(y)|_F / |g_A(y)|_F."""
    y = np.asarray(y, dtype=float)
    gA = specA.hess(y)
    z = m(y)
    if not specB.in_cone(z):
        raise OutOfCone(f"image {z} lies outside the target validity cone")
    J = m.jacobian(y)
    pulled = J.T @ specB.hess(z) @ J
    return float(np.linalg.norm(pulled - gA) / np.linalg.norm(gA))


def verify_hessian_isometry(m: PointMap, specA: NormSpec, specB: NormSpec,
                            samples: Sequence) -> IsometryReport:
    rep = IsometryReport()
    for y in samples:
        rep.residuals.append(pullback_residual(m, specA, specB, y))
        rep.samples.append(np.asarray(y, dtype=float))
    return rep


def map_homogeneity_error(m: PointMap, samples, lambdas) -> float:
    """max |m(l y) - l m(y)| / (l |m(y)|)."""
    worst = 0.0
    for y, lam in zip(samples, lambdas):
        y = np.asarray(y, dtype=float)
        a = m(y)
        worst = max(worst, float(np.linalg.norm(m(lam * y) - lam * a) / (lam * np.linalg.norm(a))))
    return worst


def nonlinearity_witness(spec: NormSpec, pairs) -> float:
    """Largest |Phi(y1 + y2) - Phi(y1) - Phi(y2)| relative to |Phi(y1)| + |Phi(y2)|."""
    worst = 0.0
    for y1, y2 in pairs:
        a, b = legendre_map(spec, y1), legendre_map(spec, y2)
        c = legendre_map(spec, np.asarray(y1) + np.asarray(y2))
        worst = max(worst, float(np.linalg.norm(c - a - b) / (np.linalg.norm(a) + np.linalg.norm(b))))
    return worst


def involution_error(spec: NormSpec, y) -> float:
    """|Phi^(Phi(y)) - y| / |y| using the Newton-based dual."""
    y = as_point(y, spec.n)
    dual = DualNorm(spec)
    back = legendre_map(dual, legendre_map(spec, y))
    return float(np.linalg.norm(back - y) / math.sqrt(float(y @ y)))
