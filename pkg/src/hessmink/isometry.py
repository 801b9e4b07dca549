"""Orbit-preserving Hessian isometries between block-rotation-invariant norms.

Such an isometry acts in spherical coordinates as (r, t, xi) -> (rho(t) r, theta(t), A xi).
The function theta(t) solves one of two first-order ODEs (the roots of a
quadratic in dtheta/dt), giving the *linear* and the *Legendre* model families
with parameter pair (a, b).  This module evaluates both families, solves for the
target profile h, classifies sampled maps into the two branches, and splits a
sampled map into its orthogonal and xi-fixing factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline
from scipy.linalg import orthogonal_procrustes
from scipy.optimize import bisect, brentq

from . import taylor
from .errors import (DegenerateDenominator, DomainError, FitFailure, InsufficientSamples,
                     IntegrationFailure, NonPositiveH, NotOrbitPreserving, RootNotBracketed)
from .jets import Jet3
from .legendre import PointMap
from .norms import NormSpec
from .profiles import ProfileFunction
from .spherical import genericity_condition
from .taylor import Series

ACCEPT = 1e-6
REJECT = 1e-3
EXCLUDE_GAP = 1e-6


# -- closed-form theta maps ----------------------------------------------------


def linear_theta(a: float, b: float, t):
    """theta(t) of the linear example with parameters (a, b)."""
    return np.arctan2(b * np.sin(t), a * np.cos(t))


def _PQ(f: ProfileFunction, t):
    """P = 2 cos t f - sin t f' and Q = 2 sin t f + cos t f' (so dE/dx = r (P, Q xi))."""
    d = f.derivatives(t, 1)
    c, s = np.cos(t), np.sin(t)
    return 2 * c * d[0] - s * d[1], 2 * s * d[0] + c * d[1]


def legendre_theta(f: ProfileFunction, a: float, b: float, t):
    """theta(t) of the Legendre example; sign-correct for both signs of a.

    Raises DegenerateDenominator where P = 0 (t = t'), the point at which
    the branch ODE is singular.
    """
    P, Q = _PQ(f, t)
    if np.any(np.abs(P) <= 1e-12 * np.hypot(P, Q)):
        raise DegenerateDenominator("t is at the root t' of -sin t f' + 2 cos t f")
    return np.arctan2(b * Q, a * P)


def linear_branch(t, theta):
    """dtheta/dt on the linear branch: cos theta sin theta / (cos t sin t)."""
    return np.cos(theta) * np.sin(theta) / (np.cos(t) * np.sin(t))


def legendre_branch(f: ProfileFunction, t, theta):
    d = f.derivatives(t, 2)
    c, s = np.cos(t), np.sin(t)
    num = (-2 * d[0] * d[2] + d[1] ** 2 - 4 * d[0] ** 2) * np.cos(theta) * np.sin(theta)
    den = (c * d[1] + 2 * s * d[0]) * (s * d[1] - 2 * c * d[0])
    return num / den


def find_t_prime(f: ProfileFunction, grid: int = 2049) -> float:
    """The unique root of -sin t f' + 2 cos t f in (0, pi)."""

    def P(t):
        return float(_PQ(f, t)[0])

    ts = np.linspace(1e-9, math.pi - 1e-9, grid)
    vals = _PQ(f, ts)[0]
    flips = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(flips) != 1:
        raise RootNotBracketed(f"-sin t f' + 2 cos t f has {len(flips)} sign changes in (0, pi)")
    i = flips[0]
    if vals[i + 1] == 0.0:
        return float(ts[i + 1])
    return float(bisect(P, ts[i], ts[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps))


# -- the quadratic in dtheta/dt ------------------------------------------------


@dataclass
class BranchODEs:
    A: float
    B: float
    C: float
    roots: tuple[float, float]  # (linear branch, Legendre branch)
    discriminant: float  # B^2 - 4AC
    discriminant_closed: float  # (G / (f cos theta sin theta))^2
    discriminant_unnormalised: float  # (G / (cos theta sin theta))^2
    genericity: float

    def residuals(self) -> tuple[float, float]:
        """Relative residual of A s^2 + B s + C at each root."""
        out = []
        for s in self.roots:
            scale = abs(self.A) * s * s + abs(self.B * s) + abs(self.C)
            out.append(abs(self.A * s * s + self.B * s + self.C) / scale)
        return tuple(out)


def branch_quadratic(f: ProfileFunction, t: float, theta: float) -> BranchODEs:
    c, s = math.cos(t), math.sin(t)
    ct, st = math.cos(theta), math.sin(theta)
    f0, f1, f2 = (float(v) for v in f.derivatives(t, 2))
    if abs(c * s) < EXCLUDE_GAP or abs(ct * st) < EXCLUDE_GAP:
        raise DomainError("t and theta must stay away from 0, pi/2 and pi")
    P = 2 * c * f0 - s * f1
    Q = 2 * s * f0 + c * f1
    if abs(P) < EXCLUDE_GAP * math.hypot(P, Q):
        raise DomainError("t is too close to t'")
    A = c * s * Q * (-P) / (2 * f0 * f0 * ct * ct * st * st)
    B = (c * s * f2 / f0 - c * s * f1 * f1 / f0**2 + (c * c - s * s) * f1 / f0 + 4 * c * s) / (ct * st)
    C = -f2 / f0 + f1 * f1 / (2 * f0 * f0) - 2.0
    r1 = ct * st / (c * s)
    r2 = (-2 * f0 * f2 + f1 * f1 - 4 * f0 * f0) * ct * st / (Q * (-P))
    G = -c * s * f2 + (c * c - s * s) * f1
    return BranchODEs(A, B, C, (r1, r2), B * B - 4 * A * C,
                      (G / (f0 * ct * st)) ** 2, (G / (ct * st)) ** 2, G)


# -- theta maps with Taylor series ----------------------------------------------


class ThetaMap:
    """theta(t) together with log rho(t), rho = |Phi(y)| / |y| on the unit circle y(t)."""

    def series(self, t: float, order: int) -> tuple[Series, Series]:
        raise NotImplementedError

    def derivs(self, t: float, order: int = 2) -> np.ndarray:
        return self.series(t, order)[0].derivatives()

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        return np.vectorize(lambda s: self.series(float(s), 0)[0].value)(t)

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        return np.vectorize(lambda s: math.exp(self.series(float(s), 0)[1].value))(t)


@dataclass
class LinearTheta(ThetaMap):
    a: float
    b: float

    def series(self, t, order):
        s, c = Series.variable(t, order).sincos()
        u, w = c * self.a, s * self.b
        return taylor.atan2(w, u), (u * u + w * w).log() * 0.5

    def theta(self, t):
        return linear_theta(self.a, self.b, t)

    def rho(self, t):
        return np.hypot(self.a * np.cos(t), self.b * np.sin(t))


@dataclass
class LegendreTheta(ThetaMap):
    f: ProfileFunction
    a: float
    b: float

    def series(self, t, order):
        fs = self.f.series(t, order + 1)
        f1 = fs.derivative()
        f0 = fs.truncate(order)
        s, c = Series.variable(t, order).sincos()
        u = (c * f0 * 2.0 - s * f1) * self.a
        w = (s * f0 * 2.0 + c * f1) * self.b
        return taylor.atan2(w, u), (u * u + w * w).log() * 0.5

    def theta(self, t):
        P, Q = _PQ(self.f, t)
        return np.arctan2(self.b * Q, self.a * P)

    def rho(self, t):
        P, Q = _PQ(self.f, t)
        return np.hypot(self.a * P, self.b * Q)


@dataclass
class PiecewiseTheta(ThetaMap):
    """Switches from ``left`` to ``right`` at ``split`` (t < split uses ``left``)."""

    left: ThetaMap
    right: ThetaMap
    split: float

    def series(self, t, order):
        return (self.left if t < self.split else self.right).series(t, order)

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.split, self.left.theta(t), self.right.theta(t))

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.split, self.left.rho(t), self.right.rho(t))


@dataclass
class ThetaSamples(ThetaMap):
    """Sampled theta(t) (and optionally dtheta/dt and rho) on increasing t.

    Missing derivatives come from a quintic interpolating spline.
    """

    t: np.ndarray
    theta_values: np.ndarray
    dtheta: Optional[np.ndarray] = None
    rho_values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.theta_values = np.asarray(self.theta_values, dtype=float)
        order = np.argsort(self.t)
        self.t = self.t[order]
        self.theta_values = self.theta_values[order]
        if self.dtheta is not None:
            self.dtheta = np.asarray(self.dtheta, dtype=float)[order]
        if self.rho_values is not None:
            self.rho_values = np.asarray(self.rho_values, dtype=float)[order]
        self._spl = None
        self._rspl = None

    def __len__(self):
        return len(self.t)

    def _spline(self):
        if self._spl is None:
            self._spl = make_interp_spline(self.t, self.theta_values, k=min(5, len(self.t) - 1))
        return self._spl

    def derivative_values(self) -> np.ndarray:
        if self.dtheta is not None:
            return self.dtheta
        return self._spline()(self.t, nu=1)

    def series(self, t, order):
        spl = self._spline()
        th = Series.from_derivatives([float(spl(t, nu=j)) for j in range(order + 1)])
        if self.rho_values is None:
            return th, Series.constant(0.0, order)
        if self._rspl is None:
            self._rspl = make_interp_spline(self.t, np.log(self.rho_values), k=min(5, len(self.t) - 1))
        lr = Series.from_derivatives([float(self._rspl(t, nu=j)) for j in range(order + 1)])
        return th, lr

    def subset(self, lo: float, hi: float) -> "ThetaSamples":
        m = (self.t > lo) & (self.t < hi)
        pick = (lambda v: None if v is None else v[m])
        return ThetaSamples(self.t[m], self.theta_values[m], pick(self.dtheta), pick(self.rho_values))

    def to_json(self) -> dict:
        out = {"t": self.t.tolist(), "theta": self.theta_values.tolist()}
        if self.dtheta is not None:
            out["dtheta"] = self.dtheta.tolist()
        if self.rho_values is not None:
            out["rho"] = self.rho_values.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ThetaSamples":
        return cls(np.array(data["t"]), np.array(data["theta"]),
                   None if "dtheta" not in data else np.array(data["dtheta"]),
                   None if "rho" not in data else np.array(data["rho"]))

    @classmethod
    def from_theta_map(cls, m: ThetaMap, ts) -> "ThetaSamples":
        ts = np.asarray(ts, dtype=float)
        d = np.array([m.derivs(float(t), 1) for t in ts])
        return cls(ts, d[:, 0], d[:, 1], np.asarray(m.rho(ts), dtype=float))


def sample_map_on_meridian(m: PointMap, k: int, n: int, ts, with_derivative: bool = True) -> ThetaSamples:
    """Push the unit meridian y(t) = cos t e_1 + sin t e_{k+1} through a map and read off theta, rho.

    dtheta/dt comes from the map's Jacobian applied to dy/dt.
    """
    ts = np.asarray(ts, dtype=float)
    th, dth, rho = [], [], []
    for t in ts:
        y = np.zeros(n)
        y[0], y[k] = math.cos(t), math.sin(t)
        z = m(y)
        head, tail = z[:k], z[k:]
        u = float(head[0]) if k == 1 else float(np.linalg.norm(head))
        w = float(np.linalg.norm(tail))
        th.append(math.atan2(w, u))
        rho.append(float(np.linalg.norm(z)))
        if with_derivative:
            ydot = np.zeros(n)
            ydot[0], ydot[k] = -math.sin(t), math.cos(t)
            zdot = m.jacobian(y) @ ydot
            udot = float(zdot[0]) if k == 1 else float(head @ zdot[:k]) / u
            wdot = float(tail @ zdot[k:]) / w
            dth.append((u * wdot - w * udot) / (u * u + w * w))
    return ThetaSamples(ts, np.array(th), np.array(dth) if with_derivative else None, np.array(rho))


# -- profiles induced by a theta map --------------------------------------------


def _inverse_series(theta_derivs: Sequence[float], t0: float, order: int) -> Series:
    """Series of t(theta) around theta(t0), from dtheta/dt derivatives (order <= 3)."""
    _, d1, *rest = list(theta_derivs) + [0.0, 0.0]
    d2, d3 = rest[0], rest[1]
    if d1 == 0.0:
        raise DomainError("dtheta/dt vanishes; theta(t) is not invertible here")
    coeffs = [t0, 1.0 / d1, -d2 / d1**3, (3 * d2 * d2 - d1 * d3) / d1**5]
    return Series.from_derivatives(coeffs[: order + 1])


class InducedProfile(ProfileFunction):
    """h(theta) = f(t) / rho(t)^2 at t = theta^{-1}(theta), the target profile of a model map."""

    def __init__(self, f: ProfileFunction, m: ThetaMap, t_band: tuple[float, float]):
        self.f, self.map, self.t_band = f, m, t_band
        lo, hi = (float(x) for x in m.theta(np.array(t_band)))
        self.theta_band = (min(lo, hi), max(lo, hi))

    def t_of(self, theta: float) -> float:
        lo, hi = self.t_band
        return brentq(lambda s: float(self.map.theta(s)) - theta, lo, hi, xtol=1e-15, rtol=1e-15)

    def series(self, theta, order):
        if order > 3:
            raise ValueError("order <= 3")
        t0 = self.t_of(float(theta))
        th, _ = self.map.series(t0, 3)
        ts = _inverse_series(th.derivatives(), t0, order)
        f_s = ts.compose(self.f.derivatives(t0, order))
        lr = ts.compose(self.map.series(t0, order)[1].derivatives())
        return f_s * (lr * -2.0).exp()

    def validate(self, samples=201):
        return []


class SolvedProfile(ProfileFunction):
    """h(theta) obtained by integrating the xi-equivariance equation along a theta map.

    The state (t, log h) is integrated in theta with
    dt/dtheta = 1/theta'(t) and d log h/dtheta = R(t, theta), where
    R = (q(t) - 2 sin^2 theta) / (sin theta cos theta) and
    q = 2 sin^2 t + cos t sin t f'/f.
    """

    def __init__(self, f: ProfileFunction, m: ThetaMap, theta_band, branches):
        self.f, self.map = f, m
        self.theta_band = theta_band
        self._branches = branches  # list of (lo, hi, OdeSolution)

    def _state(self, theta: float):
        for lo, hi, sol in self._branches:
            if lo - 1e-15 <= theta <= hi + 1e-15:
                return sol(theta)
        raise DomainError(f"theta={theta} outside the solved band {self.theta_band}")

    def series(self, theta, order):
        if order > 3:
            raise ValueError("solved profiles provide derivatives up to order 3")
        theta = float(theta)
        t0, L0 = (float(v) for v in self._state(theta))
        th = self.map.derivs(t0, 2)
        k = max(order - 1, 0)
        ts = _inverse_series(th, t0, k)
        tv = Series.variable(theta, k)
        fs = ts.compose(self.f.derivatives(t0, k + 1))
        f1 = ts.compose(self.f.derivatives(t0, k + 1)[1:])
        st, ct = ts.sincos()
        q = st * st * 2.0 + ct * st * f1 / fs
        sth, cth = tv.sincos()
        R = (q - sth * sth * 2.0) / (sth * cth)
        if order == 0:
            return Series([math.exp(L0)])
        L = R._integrate(L0)
        return L.exp()

    def validate(self, samples=201):
        lo, hi = self.theta_band
        ts = np.linspace(lo, hi, samples)
        return [] if np.all(self(ts) > 0) else ["solved profile is not positive"]


def _rhs(f: ProfileFunction, m: ThetaMap):
    def rhs(theta, state):
        t = state[0]
        d1 = m.derivs(t, 1)[1]
        fd = f.derivatives(t, 1)
        st, ct = math.sin(t), math.cos(t)
        q = 2 * st * st + ct * st * fd[1] / fd[0]
        sth, cth = math.sin(theta), math.cos(theta)
        return [1.0 / d1, (q - 2 * sth * sth) / (sth * cth)]
    return rhs


def solve_h(f: ProfileFunction, m: ThetaMap, h0: float, theta0: float,
            band: tuple[float, float], rtol: float = 1e-12, atol: float = 1e-13) -> SolvedProfile:
    """Target profile h on theta(band) with h(theta0) = h0.

    ``band`` is a t-interval on which theta is monotone and avoids pi/2;
    theta0 must be attained inside it.
    """
    if h0 <= 0:
        raise NonPositiveH("h0 must be positive")
    lo_t, hi_t = band
    th_lo, th_hi = (float(v) for v in m.theta(np.array([lo_t, hi_t])))
    if (th_lo - math.pi / 2) * (th_hi - math.pi / 2) <= 0:
        raise DomainError("theta(band) must not contain pi/2")
    try:
        t0 = brentq(lambda s: float(m.theta(s)) - theta0, lo_t, hi_t, xtol=1e-15, rtol=1e-15)
    except ValueError:
        raise DomainError("theta0 is not attained on the band") from None
    rhs = _rhs(f, m)
    branches = []
    for end in (th_lo, th_hi):
        if abs(end - theta0) < 1e-15:
            continue
        sol = solve_ivp(rhs, (theta0, end), [t0, math.log(h0)], method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise IntegrationFailure(sol.message)
        branches.append((min(theta0, end), max(theta0, end), sol.sol))
    out = SolvedProfile(f, m, (min(th_lo, th_hi), max(th_lo, th_hi)), branches)
    return out


def equivariance_residual(f: ProfileFunction, h: ProfileFunction, m: ThetaMap, t: float) -> float:
    """2 sin^2 t + cos t sin t f'/f - 2 sin^2 theta - cos theta sin theta h'/h at theta(t)."""
    fd = f.derivatives(t, 1)
    th = float(m.theta(t))
    hd = h.derivatives(th, 1)
    lhs = 2 * math.sin(t) ** 2 + math.cos(t) * math.sin(t) * fd[1] / fd[0]
    rhs = 2 * math.sin(th) ** 2 + math.cos(th) * math.sin(th) * hd[1] / hd[0]
    return float(abs(lhs - rhs))


def energy_residual(f: ProfileFunction, h: ProfileFunction, m: ThetaMap, t: float) -> float:
    """Relative mismatch of the meridian speed identity between f and h along theta(t)."""
    fd = f.derivatives(t, 2)
    d = m.derivs(t, 1)
    hd = h.derivatives(float(d[0]), 2)
    lhs = fd[2] / fd[0] - fd[1] ** 2 / (2 * fd[0] ** 2) + 2
    rhs = d[1] ** 2 * (hd[2] / hd[0] - hd[1] ** 2 / (2 * hd[0] ** 2) + 2)
    return float(abs(lhs - rhs) / abs(lhs))


# -- maps and norms -------------------------------------------------------------


def _split(y: np.ndarray, k: int):
    if k == 1:
        u = float(y[0])
        head_dir = np.ones(1)
    else:
        u = float(np.linalg.norm(y[:k]))
        head_dir = y[:k] / u
    tail = y[k:]
    w = float(np.linalg.norm(tail))
    return u, w, head_dir, tail / w


class OrbitMap(PointMap):
    """(r, t, xi) -> (rho(t) r, theta(t), xi), optionally followed by an orthogonal ``outer``."""

    def __init__(self, m: ThetaMap, k: int, n: int, outer: Optional[np.ndarray] = None):
        self.map, self.k, self.n = m, k, n
        self.outer = None if outer is None else np.asarray(outer, dtype=float)

    def _parts(self, y):
        y = np.asarray(y, dtype=float)
        u, w, xi1, xi2 = _split(y, self.k)
        if w == 0.0 or (self.k > 1 and u == 0.0):
            raise DomainError("orbit maps are not defined on singular orbits")
        r = float(np.linalg.norm(y))
        t = math.atan2(w, u)
        th, lr = self.map.series(t, 1)
        return y, u, w, xi1, xi2, r, t, th, lr

    def _image(self, r, th, lr, xi1, xi2):
        R = r * math.exp(lr.value)
        T = th.value
        if self.k == 1:
            head = np.array([R * math.cos(T)])
        else:
            head = R * math.cos(T) * xi1
        z = np.concatenate([head, R * math.sin(T) * xi2])
        return z

    def __call__(self, y):
        y, u, w, xi1, xi2, r, t, th, lr = self._parts(y)
        z = self._image(r, th, lr, xi1, xi2)
        return z if self.outer is None else self.outer @ z

    def jacobian(self, y):
        y, u, w, xi1, xi2, r, t, th, lr = self._parts(y)
        k, n = self.k, self.n
        rho = math.exp(lr.value)
        dlr = lr.c[1]
        dth = th.c[1]
        R = r * rho
        T = th.value
        du = np.zeros(n)
        dw = np.zeros(n)
        if k == 1:
            du[0] = 1.0
        else:
            du[:k] = xi1
        dw[k:] = xi2
        dt = (u * dw - w * du) / (r * r)
        dR = rho * y / r + R * dlr * dt
        dT = dth * dt
        J = np.zeros((n, n))
        if k == 1:
            J[0] = math.cos(T) * dR - R * math.sin(T) * dT
        else:
            dxi1 = np.zeros((k, n))
            dxi1[:, :k] = (np.eye(k) - np.outer(xi1, xi1)) / u
            J[:k] = np.outer(xi1, math.cos(T) * dR - R * math.sin(T) * dT) + R * math.cos(T) * dxi1
        dxi2 = np.zeros((n - k, n))
        dxi2[:, k:] = (np.eye(n - k) - np.outer(xi2, xi2)) / w
        J[k:] = np.outer(xi2, math.sin(T) * dR + R * math.cos(T) * dT) + R * math.sin(T) * dxi2
        return J if self.outer is None else self.outer @ J


class LinearPushforward(NormSpec):
    """E_2(x) = E_1(M^{-1} x): the norm for which x -> M x is an isometry from E_1."""

    kind = "pushforward"

    def __init__(self, base: NormSpec, M: np.ndarray):
        self.base = base
        self.M = np.asarray(M, dtype=float)
        self.Minv = np.linalg.inv(self.M)
        self.n = base.n

    def in_cone(self, y):
        return self.base.in_cone(self.Minv @ y)

    def _E(self, y):
        return self.base.E(self.Minv @ y)

    def _jet3(self, y):
        j = self.base.jet3(self.Minv @ y)
        N = self.Minv
        return Jet3(j.value, N.T @ j.grad, N.T @ j.hess @ N,
                    np.einsum("abc,ai,bj,ck->ijk", j.third, N, N, N))


def block_diag_params(a: float, b: float, k: int, n: int) -> np.ndarray:
    return np.diag([a] * k + [b] * (n - k))


def linear_example(a: float, b: float, k: int, n: int):
    """(map, target-norm factory) of the linear example: target = base o map^{-1}."""
    from .legendre import LinearMap

    D = block_diag_params(a, b, k, n)
    return LinearMap(D), (lambda base: LinearPushforward(base, D))


def legendre_example(base: NormSpec, a: float, b: float, k: int):
    """The Legendre example: x -> D grad E(x), with target norm dual(base) o D^{-1}."""
    from .legendre import ComposedMap, DualNorm, LegendreMap, LinearMap

    D = block_diag_params(a, b, k, base.n)
    return ComposedMap(LinearMap(D), LegendreMap(base)), LinearPushforward(DualNorm(base), D)


# -- models and classification --------------------------------------------------


@dataclass
class LinearModel:
    matrix: np.ndarray
    params: Optional[tuple[float, float]] = None

    def to_json(self):
        out = {"kind": "linear", "matrix": np.asarray(self.matrix).tolist()}
        if self.params is not None:
            out["a"], out["b"] = self.params
        return out


@dataclass
class LegendreModel:
    base: ProfileFunction
    params: tuple[float, float]

    def to_json(self):
        return {"kind": "legendre", "a": self.params[0], "b": self.params[1]}


@dataclass
class NumericModel:
    theta_map: ThetaMap
    h: Optional[ProfileFunction] = None
    rotations: Optional[np.ndarray] = None

    def to_json(self):
        out = {"kind": "numeric"}
        if isinstance(self.theta_map, ThetaSamples):
            out["samples"] = self.theta_map.to_json()
        return out


@dataclass
class GluedModel:
    segments: list  # (t_lo, t_hi, model)

    def to_json(self):
        return {"kind": "glued", "segments": [
            {"t_lo": lo, "t_hi": hi, "model": m.to_json()} for lo, hi, m in self.segments]}


@dataclass
class Classification:
    verdict: str  # "linear" | "legendre" | "glued" | "indeterminate"
    model: object = None
    labels: list = field(default_factory=list)
    residuals: np.ndarray = None  # (N, 2): linear-branch, Legendre-branch relative residuals
    t: np.ndarray = None
    boundaries: list = field(default_factory=list)  # (t_left, t_right) brackets of branch switches
    fit_error: float = float("nan")

    def to_json(self) -> dict:
        res = self.residuals
        out = {
            "verdict": self.verdict,
            "model": None if self.model is None else self.model.to_json(),
            "boundaries": [list(b) for b in self.boundaries],
            "label_counts": {lab: self.labels.count(lab) for lab in sorted(set(self.labels))},
            "fit_error": None if math.isnan(self.fit_error) else self.fit_error,
        }
        if res is not None and len(res):
            out["residual_stats"] = {
                "linear": {"min": float(np.nanmin(res[:, 0])), "max": float(np.nanmax(res[:, 0]))},
                "legendre": {"min": float(np.nanmin(res[:, 1])), "max": float(np.nanmax(res[:, 1]))},
            }
        return out


def _label(r_lin: float, r_leg: float, accept: float, reject: float) -> str:
    lin_ok, leg_ok = r_lin < accept, r_leg < accept
    if lin_ok and leg_ok:
        return "ambiguous"
    if lin_ok:
        return "linear" if r_leg > reject else "ambiguous"
    if leg_ok:
        return "legendre" if r_lin > reject else "ambiguous"
    return "unfit"


def branch_residuals(f: ProfileFunction, samples: ThetaSamples) -> np.ndarray:
    """Per-sample relative residuals of dtheta/dt against both branches (NaN where excluded)."""
    t, th = samples.t, samples.theta_values
    d = samples.derivative_values()
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = linear_branch(t, th)
        s2 = legendre_branch(f, t, th)
        scale = np.abs(d)
        out = np.stack([np.abs(d - s1) / scale, np.abs(d - s2) / scale], axis=1)
    P, Q = _PQ(f, t)
    bad = ((np.abs(np.cos(t) * np.sin(t)) < EXCLUDE_GAP) | (np.abs(np.cos(th) * np.sin(th)) < EXCLUDE_GAP)
           | (np.abs(P) < EXCLUDE_GAP * np.hypot(P, Q)) | (d == 0))
    out[bad] = np.nan
    return out


def _null_direction(rows: np.ndarray) -> tuple[float, float]:
    _, _, vt = np.linalg.svd(rows)
    a, b = vt[-1]
    if b < 0:
        a, b = -a, -b
    return float(a), float(b)


def fit_parameters(f: ProfileFunction, branch: str, samples: ThetaSamples) -> tuple[float, float, float]:
    """(a, b, max theta error) of the model best matching the samples.

    theta = atan2(b W, a U) with (U, W) = (cos t, sin t) or (P, Q) gives the
    linear homogeneous system a U sin theta - b W cos theta = 0; its null
    vector fixes (a, b) up to scale with b > 0, which also fixes the sign of a.
    The scale comes from rho^2 = a^2 U^2 + b^2 W^2 when rho samples exist,
    otherwise b = 1.
    """
    t, th = samples.t, samples.theta_values
    if branch == "linear":
        U, W = np.cos(t), np.sin(t)
    else:
        U, W = _PQ(f, t)
    rows = np.stack([U * np.sin(th), -W * np.cos(th)], axis=1)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    a, b = _null_direction(rows)
    if samples.rho_values is not None:
        lam = math.sqrt(float(np.median(samples.rho_values**2 / ((a * U) ** 2 + (b * W) ** 2))))
    else:
        lam = 1.0 / b
    a, b = a * lam, b * lam
    model = LinearTheta(a, b) if branch == "linear" else LegendreTheta(f, a, b)
    err = float(np.max(np.abs(model.theta(t) - th)))
    return a, b, err


def _model_for(f, branch, a, b, k, n):
    if branch == "linear":
        return LinearModel(block_diag_params(a, b, k, n), (a, b))
    return LegendreModel(f, (a, b))


def classify(f: ProfileFunction, samples: ThetaSamples, band: Optional[tuple[float, float]] = None,
             k: int = 1, n: int = 3, accept: float = ACCEPT, reject: float = REJECT) -> Classification:
    """Assign each sample to a branch of the quadratic and summarise the map.

    Linear/Legendre when all decided samples agree, Glued when the decided
    label changes along t (boundaries bracketed by neighbouring samples), and
    Indeterminate if any sample fits neither branch or nothing is decided.
    """
    if band is not None:
        samples = samples.subset(*band)
    if len(samples) < 8:
        raise InsufficientSamples(f"need at least 8 samples, got {len(samples)}")
    res = branch_residuals(f, samples)
    labels = []
    for r1, r2 in res:
        if np.isnan(r1) or np.isnan(r2):
            labels.append("excluded")
        else:
            labels.append(_label(r1, r2, accept, reject))
    out = Classification("indeterminate", labels=labels, residuals=res, t=samples.t)
    if "unfit" in labels:
        return out
    decided = [(i, lab) for i, lab in enumerate(labels) if lab in ("linear", "legendre")]
    if not decided:
        return out
    runs = []  # [label, first index, last index]
    for i, lab in decided:
        if runs and runs[-1][0] == lab:
            runs[-1][2] = i
        else:
            runs.append([lab, i, i])
    t = samples.t
    if len(runs) == 1:
        lab = runs[0][0]
        a, b, err = fit_parameters(f, lab, samples)
        out.verdict = lab
        out.model = _model_for(f, lab, a, b, k, n)
        out.fit_error = err
        return out
    segments = []
    edges = [t[0]] + [0.5 * (t[runs[j][2]] + t[runs[j + 1][1]]) for j in range(len(runs) - 1)] + [t[-1]]
    errs = []
    for j, (lab, i0, i1) in enumerate(runs):
        sub = samples.subset(edges[j] - 1e-300 if j == 0 else edges[j], edges[j + 1] + (1e-12 if j == len(runs) - 1 else 0.0))
        if j == 0:
            sub = ThetaSamples(t[: i1 + 1], samples.theta_values[: i1 + 1],
                               None if samples.dtheta is None else samples.dtheta[: i1 + 1],
                               None if samples.rho_values is None else samples.rho_values[: i1 + 1])
        elif j == len(runs) - 1:
            sub = ThetaSamples(t[i0:], samples.theta_values[i0:],
                               None if samples.dtheta is None else samples.dtheta[i0:],
                               None if samples.rho_values is None else samples.rho_values[i0:])
        else:
            sl = slice(i0, i1 + 1)
            sub = ThetaSamples(t[sl], samples.theta_values[sl],
                               None if samples.dtheta is None else samples.dtheta[sl],
                               None if samples.rho_values is None else samples.rho_values[sl])
        a, b, err = fit_parameters(f, lab, sub)
        errs.append(err)
        segments.append((float(edges[j]), float(edges[j + 1]), _model_for(f, lab, a, b, k, n)))
    out.verdict = "glued"
    out.model = GluedModel(segments)
    out.boundaries = [(float(t[runs[j][2]]), float(t[runs[j + 1][1]])) for j in range(len(runs) - 1)]
    out.fit_error = max(errs)
    return out


def classify_bands(f: ProfileFunction, samples: ThetaSamples, lo: float, hi: float,
                   k: int = 1, n: int = 3, accept: float = ACCEPT, reject: float = REJECT) -> dict:
    """Classification report with one verdict per generic band of (lo, hi)."""
    bands = []
    for band in generic_bands(f, lo, hi):
        entry = {"band": list(band)}
        try:
            entry.update(classify(f, samples, band, k, n, accept, reject).to_json())
        except InsufficientSamples as exc:
            entry.update({"verdict": "insufficient-samples", "detail": str(exc)})
        bands.append(entry)
    return {"bands": bands}


def fit_euclidean_profile(f: ProfileFunction, band: tuple[float, float], grid: int = 200):
    """Least-squares fit f = c1 + c2 cos 2t on the band; returns (c1, c2, relative max residual)."""
    ts = np.linspace(band[0], band[1], grid)
    vals = f(ts)
    X = np.stack([np.ones_like(ts), np.cos(2 * ts)], axis=1)
    coef, *_ = np.linalg.lstsq(X, vals, rcond=None)
    resid = float(np.max(np.abs(X @ coef - vals)) / np.max(np.abs(vals)))
    return float(coef[0]), float(coef[1]), resid


def classify_flat(f: ProfileFunction, samples: ThetaSamples, band: tuple[float, float],
                  k: int = 1, n: int = 3, fit_tol: float = 1e-8, ode_tol: float = ACCEPT) -> LinearModel:
    """Linear model for a map on a band where the profile is Euclidean.

    There both branches merge into cos t sin t theta' = cos theta sin theta.
    """
    c1, c2, resid = fit_euclidean_profile(f, band)
    if resid >= fit_tol:
        raise FitFailure(f"profile is not of the form c1 + c2 cos 2t on the band (residual {resid:.2e})")
    sub = samples.subset(*band)
    if len(sub) < 8:
        raise InsufficientSamples("need at least 8 samples on the band")
    d = sub.derivative_values()
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(np.cos(sub.t) * np.sin(sub.t) * d - np.cos(sub.theta_values) * np.sin(sub.theta_values))
    ok = np.abs(np.cos(sub.t) * np.sin(sub.t)) > EXCLUDE_GAP
    if np.nanmax(r[ok]) > ode_tol:
        raise FitFailure("samples violate the merged branch ODE")
    a, b, _ = fit_parameters(f, "linear", sub)
    return LinearModel(block_diag_params(a, b, k, n), (a, b))


def generic_bands(f: ProfileFunction, lo: float, hi: float, grid: int = 4001,
                  rel_tol: float = 1e-8) -> list[tuple[float, float]]:
    """Maximal sub-intervals of (lo, hi) on which |genericity| > rel_tol * max|genericity|.

    Values below 1e-12 max|f| count as zero, so rounding noise on a flat
    profile does not produce spurious bands.
    """
    ts = np.linspace(lo, hi, grid)
    G = np.abs(genericity_condition(f, ts))
    floor = 1e-12 * float(np.abs(f(ts)).max())
    scale = float(G.max())
    if scale <= floor:
        return []
    good = G > max(rel_tol * scale, floor)
    bands, start = [], None
    for i, g in enumerate(good):
        if g and start is None:
            start = ts[i]
        if not g and start is not None:
            bands.append((float(start), float(ts[i - 1])))
            start = None
    if start is not None:
        bands.append((float(start), float(ts[-1])))
    return bands


# -- decomposition of sampled maps ------------------------------------------------


def _spherical_parts(y: np.ndarray, k: int):
    u, w, xi1, xi2 = _split(y, k)
    return float(np.linalg.norm(y)), math.atan2(w, u), xi1, xi2


def _procrustes(src: np.ndarray, dst: np.ndarray):
    Rm, _ = orthogonal_procrustes(src, dst)  # src @ Rm ~ dst
    A = Rm.T
    return A, float(np.max(np.linalg.norm(src @ A.T - dst, axis=1)))


@dataclass
class Decomposition:
    linear: LinearModel
    numeric: NumericModel
    swap: bool
    residual: float
    reconstruction_error: float


def decompose(sources: Sequence, images: Sequence, k: int, tol: float = 1e-8) -> Decomposition:
    """Split an orbit-preserving map into Phi_1 (orthogonal block action) o Phi_2 (xi-fixing)."""
    sources = np.asarray(sources, dtype=float)
    images = np.asarray(images, dtype=float)
    n = sources.shape[1]
    S = [_spherical_parts(y, k) for y in sources]
    T = [_spherical_parts(z, k) for z in images]
    cand = []
    xs2 = np.array([s[3] for s in S])
    if k == 1:
        A, res = _procrustes(xs2, np.array([z[3] for z in T]))
        outer = np.eye(n)
        outer[1:, 1:] = A
        cand.append((res, outer, False))
    else:
        xs1 = np.array([s[2] for s in S])
        A1, r1 = _procrustes(xs1, np.array([z[2] for z in T]))
        A2, r2 = _procrustes(xs2, np.array([z[3] for z in T]))
        outer = np.zeros((n, n))
        outer[:k, :k], outer[k:, k:] = A1, A2
        cand.append((max(r1, r2), outer, False))
        if n == 2 * k:
            # images swap the blocks: image first block ~ xi2, second ~ xi1
            B1, s1 = _procrustes(xs2, np.array([z[2] for z in T]))
            B2, s2 = _procrustes(xs1, np.array([z[3] for z in T]))
            outer = np.zeros((n, n))
            outer[:k, k:], outer[k:, :k] = B1, B2
            cand.append((max(s1, s2), outer, True))
    res, outer, swap = min(cand, key=lambda c: c[0])
    if res > tol:
        raise NotOrbitPreserving(f"xi-action is not a fixed orthogonal map (residual {res:.2e})")
    inner = images @ outer  # outer^T z for each row z
    ts = np.array([s[1] for s in S])
    rs = np.array([s[0] for s in S])
    th2 = np.array([_spherical_parts(z, k)[1] for z in inner])
    rho = np.linalg.norm(inner, axis=1) / rs
    order = np.argsort(ts)
    uniq = np.concatenate([[True], np.diff(ts[order]) > 1e-12])
    samples = ThetaSamples(ts[order][uniq], th2[order][uniq], None, rho[order][uniq])
    # reconstruction check: rebuild each image from (rho, theta) and xi of the source
    worst = 0.0
    for y, z, (r, _, xi1, xi2), T2, p in zip(sources, images, S, th2, rho):
        head = np.array([r * p * math.cos(T2)]) if k == 1 else r * p * math.cos(T2) * xi1
        z2 = outer @ np.concatenate([head, r * p * math.sin(T2) * xi2])
        worst = max(worst, float(np.linalg.norm(z2 - z) / np.linalg.norm(z)))
    if worst > tol:
        raise NotOrbitPreserving(f"map does not fix the xi-coordinates after factoring (error {worst:.2e})")
    return Decomposition(LinearModel(outer), NumericModel(samples, rotations=outer), swap, res, worst)


# -- mixed-branch obstruction ---------------------------------------------------------


@dataclass
class MixedBranchCheck:
    a12: float
    b12_linear: float
    b12_legendre: float
    mismatch: float

    @property
    def opposite_signs(self) -> bool:
        return self.b12_linear * self.b12_legendre < 0


def mixed_branch_check(spec: NormSpec, y, k: int, linear_params, legendre_params) -> MixedBranchCheck:
    """Compare the image fundamental tensor predicted by a linear and a Legendre example.

    On the (x_1, x_{k+1}) block the linear example predicts D1^{-1} a D1^{-1} and
    the Legendre example D2^{-1} (a^{-1}) D2^{-1}, with a the fundamental tensor
    of the source at y.  With a1 a2 > 0 the off-diagonal entries have opposite
    signs unless a_12 = 0, so gluing the two branches at y is impossible there.
    """
    g = spec.hess(y)
    ginv = np.linalg.inv(g)
    idx = [0, k]
    a = g[np.ix_(idx, idx)]
    ai = ginv[np.ix_(idx, idx)]
    a1, b1 = linear_params
    a2, b2 = legendre_params
    D1 = np.diag([1 / a1, 1 / b1])
    D2 = np.diag([1 / a2, 1 / b2])
    B1 = D1 @ a @ D1
    B2 = D2 @ ai @ D2
    return MixedBranchCheck(float(a[0, 1]), float(B1[0, 1]), float(B2[0, 1]),
                            float(np.abs(B1 - B2).max() / np.abs(B1).max()))
