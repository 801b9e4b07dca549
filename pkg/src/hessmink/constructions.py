"""Example objects: the glued nonlinear isometry and 2-D generalised polar charts."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import ConvexityLost, LengthMismatch, OverlappingSupports, QuadratureFailure, SpecError
from .legendre import DualNorm, LegendreMap, PointMap, verify_hessian_isometry
from .norms import NormSpec, ProfileNorm, check_strong_convexity, orbit_coordinates
from .profiles import BumpProfile

# -- glued construction ------------------------------------------------------------


class GluedSpec(NormSpec):
    """E_2: the Legendre push-forward of E_1 on the cone over ``swap``, E_1 elsewhere."""

    kind = "glued"

    def __init__(self, F1: ProfileNorm, swap: tuple[float, float]):
        self.F1 = F1
        self.dual = DualNorm(F1)
        self.swap = swap
        self.n = F1.n

    def _piece(self, y) -> NormSpec:
        t = orbit_coordinates(y, self.F1.k)[2]
        return self.dual if self.swap[0] < t < self.swap[1] else self.F1

    def _E(self, y):
        return self._piece(y).E(y)

    def _jet3(self, y):
        return self._piece(y).jet3(y)


class GluedMap(PointMap):
    """Identity on the cone over ``fixed``, grad E_1 elsewhere."""

    def __init__(self, F1: ProfileNorm, fixed: tuple[float, float]):
        self.F1 = F1
        self.fixed = fixed
        self.legendre = LegendreMap(F1)

    def _is_fixed(self, y) -> bool:
        t = orbit_coordinates(np.asarray(y, dtype=float), self.F1.k)[2]
        return self.fixed[0] <= t <= self.fixed[1]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return y.copy() if self._is_fixed(y) else self.legendre(y)

    def jacobian(self, y):
        return np.eye(len(y)) if self._is_fixed(y) else self.legendre.jacobian(y)


@dataclass
class GluedNorm:
    F0: ProfileNorm
    F1: ProfileNorm
    F2: GluedSpec
    map: GluedMap
    supports: list  # [U1, U2] as orbit-angle intervals
    scale: float  # factor applied to the requested bump amplitudes

    def to_json(self) -> dict:
        return {"kind": "glued", "k": self.F1.k, "n": self.F1.n,
                "profile": self.F1.f.to_json(),
                "intervals": [list(u) for u in self.supports], "scale": self.scale}


def meridian_point(t: float, k: int, n: int, r: float = 1.0, phase: float = 0.0) -> np.ndarray:
    """r (cos t e_1 + sin t (cos phase e_{k+1} + sin phase e_{k+2}))."""
    y = np.zeros(n)
    y[0] = r * math.cos(t)
    y[k] = r * math.sin(t) * math.cos(phase)
    if n > k + 1:
        y[k + 1] = r * math.sin(t) * math.sin(phase)
    return y


def _convex(F: ProfileNorm, lo: float, hi: float, count: int = 161) -> bool:
    pts = [meridian_point(t, F.k, F.n, phase=0.3) for t in np.linspace(lo, hi, count)]
    return check_strong_convexity(F, pts).ok


def build_glued(deformations: Sequence[tuple[float, float, float]], k: int = 1, n: int = 3,
                min_gap: float = 0.05, max_halvings: int = 30) -> GluedNorm:
    """Glue a Legendre piece into a norm deformed on two disjoint orbit-angle intervals.

    ``deformations`` are two ``(center, halfwidth, amplitude)`` bumps added to
    the Euclidean profile 1/2; the first support is U_1 (kept fixed by the map),
    the second U_2 (where the target norm is the Legendre push-forward).
    Amplitudes are halved until E_1 is strongly convex on both supports.
    """
    if len(deformations) != 2:
        raise SpecError("exactly two deformations are supported")
    (c1, w1, _), (c2, w2, _) = deformations
    U1, U2 = (c1 - w1, c1 + w1), (c2 - w2, c2 + w2)
    if not (U1[1] + min_gap <= U2[0] or U2[1] + min_gap <= U1[0]):
        raise OverlappingSupports(f"supports {U1} and {U2} are closer than {min_gap}")
    period = 2 * math.pi if k == 1 else math.pi
    F0 = ProfileNorm(k, n, BumpProfile(0.5, (), period))
    scale = 1.0
    for _ in range(max_halvings + 1):
        bumps = [(c, w, a * scale) for c, w, a in deformations]
        F1 = ProfileNorm(k, n, BumpProfile(0.5, bumps, period))
        if all(_convex(F1, *U) for U in (U1, U2)):
            break
        scale *= 0.5
    else:
        raise ConvexityLost("no admissible amplitude keeps the deformed norm strongly convex")
    return GluedNorm(F0, F1, GluedSpec(F1, U2), GluedMap(F1, U1), [U1, U2], scale)


def boundary_jump(glued: GluedNorm, offsets=(0.0, 1e-4, 1e-3, 1e-2)) -> float:
    """Largest mismatch between the two pieces of E_2 (all jet orders) on stencils at its switch angles.

    Stencil points sit on the switch angles and just outside the swapped
    interval; each jet order is compared relative to its own magnitude.
    """
    worst = 0.0
    F1, dual = glued.F2.F1, glued.F2.dual
    lo, hi = glued.F2.swap
    for edge, sign in ((lo, -1.0), (hi, 1.0)):
        for d in offsets:
            y = meridian_point(edge + sign * d, F1.k, F1.n, r=1.3, phase=0.7)
            a, b = F1.jet3(y), dual.jet3(y)
            for u, v in ((a.value, b.value), (a.grad, b.grad), (a.hess, b.hess), (a.third, b.third)):
                u, v = np.asarray(u), np.asarray(v)
                worst = max(worst, float(np.abs(u - v).max() / (np.abs(u).max() + 1e-300)))
    return worst


def boundary_dense_samples(glued: GluedNorm, per_interval: int = 12, rng=None) -> list[np.ndarray]:
    """Points on cones over and near the supports, denser close to their edges."""
    rng = np.random.default_rng(0) if rng is None else rng
    F = glued.F1
    out = []
    for lo, hi in glued.supports:
        w = hi - lo
        base = np.linspace(lo - 0.1 * w, hi + 0.1 * w, per_interval)
        edges = np.concatenate([lo + w * np.array([-1e-3, 1e-3, 1e-2]), hi + w * np.array([-1e-2, -1e-3, 1e-3])])
        for t in np.concatenate([base, edges]):
            if 0.0 < t < math.pi:
                out.append(meridian_point(float(t), F.k, F.n, r=float(rng.uniform(0.5, 2.0)),
                                          phase=float(rng.uniform(0, 2 * math.pi))))
    return out


# -- 2-D generalised polar coordinates --------------------------------------------------


def _unit(phi: float) -> np.ndarray:
    return np.array([math.cos(phi), math.sin(phi)])


def _speed(norm: NormSpec, phi: float) -> float:
    """g-speed of the indicatrix parametrised by the Euclidean angle phi."""
    u = _unit(phi)
    du = np.array([-u[1], u[0]])
    j = norm.jet3(u)
    F = math.sqrt(2 * j.value)
    dF = float(j.grad @ du) / F
    ydot = du / F - u * dF / (F * F)
    return math.sqrt(float(ydot @ j.hess @ ydot))


def _quad(fn, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(fn, a, b, epsabs=tol, epsrel=tol, limit=200)
        except IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from None
    if err > 10 * tol * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature error estimate {err:.2e} above tolerance")
    return val


@dataclass
class PolarChart2D:
    """g-arclength chart of a 2-D norm, with the base ray phi = 0 at theta = 0."""

    norm: NormSpec
    arclength: float
    phi_nodes: np.ndarray
    theta_nodes: np.ndarray  # cumulative arclength at phi_nodes, monotone
    tol: float
    refinement_delta: float = field(default=float("nan"))

    def theta_of_phi(self, phi: float) -> float:
        phi = phi % (2 * math.pi)
        i = min(int(np.searchsorted(self.phi_nodes, phi, side="right")) - 1, len(self.phi_nodes) - 2)
        return float(self.theta_nodes[i] + _quad(lambda p: _speed(self.norm, p), self.phi_nodes[i], phi, self.tol))

    def phi_of_theta(self, theta: float) -> float:
        theta = theta % self.arclength
        i = min(int(np.searchsorted(self.theta_nodes, theta, side="right")) - 1, len(self.phi_nodes) - 2)
        lo, hi = self.phi_nodes[i], self.phi_nodes[i + 1]
        g = lambda p: self.theta_of_phi(p) - theta if p < 2 * math.pi else self.arclength - theta  # noqa: E731
        if g(lo) >= 0:
            return float(lo)
        return float(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15))

    def point(self, theta: float) -> tuple[np.ndarray, np.ndarray]:
        """Indicatrix point at arclength theta and its derivative in theta."""
        phi = self.phi_of_theta(theta)
        u = _unit(phi)
        du = np.array([-u[1], u[0]])
        j = self.norm.jet3(u)
        F = math.sqrt(2 * j.value)
        ydot = du / F - u * float(j.grad @ du) / F**3
        return u / F, ydot / _speed(self.norm, phi)


def polar_chart_2d(norm: NormSpec, tol: float = 1e-10, panels: int = 64) -> PolarChart2D:
    """Indicatrix g-length by panel-wise adaptive quadrature, checked against a halved panel size."""
    if norm.n != 2:
        raise SpecError("polar charts need a 2-D norm")
    phis = np.linspace(0.0, 2 * math.pi, panels + 1)
    speed = lambda p: _speed(norm, p)  # noqa: E731
    pieces = np.array([_quad(speed, a, b, tol / panels) for a, b in zip(phis[:-1], phis[1:])])
    theta = np.concatenate([[0.0], np.cumsum(pieces)])
    fine = np.linspace(0.0, 2 * math.pi, 2 * panels + 1)
    L2 = sum(_quad(speed, a, b, tol / panels) for a, b in zip(fine[:-1], fine[1:]))
    L = float(theta[-1])
    if not L > 0:
        raise QuadratureFailure("non-positive arclength")
    return PolarChart2D(norm, L, phis, theta, tol / panels, abs(L - L2))


class PolarMatchMap(PointMap):
    """(F, theta)_A -> (F, theta)_B with the base rays matched and orientation kept."""

    def __init__(self, A: PolarChart2D, B: PolarChart2D):
        self.A, self.B = A, B

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        FA = self.A.norm.F(y)
        z, _ = self.B.point(self.A.theta_of_phi(math.atan2(y[1], y[0])))
        return FA * z

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        j = self.A.norm.jet3(y)
        FA = math.sqrt(2 * j.value)
        dFA = j.grad / FA
        phi = math.atan2(y[1], y[0])
        dphi = np.array([-y[1], y[0]]) / float(y @ y)
        dtheta = _speed(self.A.norm, phi) * dphi
        z, dz = self.B.point(self.A.theta_of_phi(phi))
        return np.outer(z, dFA) + FA * np.outer(dz, dtheta)


def two_d_isometry(normA: NormSpec, normB: NormSpec, tol: float = 1e-8,
                   charts: Optional[tuple[PolarChart2D, PolarChart2D]] = None) -> PolarMatchMap:
    A, B = charts if charts is not None else (polar_chart_2d(normA), polar_chart_2d(normB))
    if abs(A.arclength - B.arclength) >= tol:
        raise LengthMismatch(f"indicatrix lengths differ: {A.arclength!r} vs {B.arclength!r}")
    return PolarMatchMap(A, B)


def profile_arclength(e, lo: float = 0.0, hi: float = 2 * math.pi, tol: float = 1e-12) -> float:
    """Length from the restriction e(phi) = E(cos phi, sin phi) alone.

    Uses L = int sqrt(1 + e''/(2e) - e'^2 / (4 e^2)) dphi, where e(phi)
    returns (e, e', e'').
    """
    def integrand(p):
        e0, e1, e2 = e(p)
        return math.sqrt(1 + e2 / (2 * e0) - e1 * e1 / (4 * e0 * e0))
    return _quad(integrand, lo, hi, tol)


def isometry_check_2d(m: PolarMatchMap, samples) -> float:
    return verify_hessian_isometry(m, m.A.norm, m.B.norm, samples).max_residual
