"""Spherical-coordinate calculus for block-rotation-invariant norms E = r^2 f(theta).

Components are taken in the 3-dimensional chart (r, theta, phi) on the space
spanned by e_1, e_{k+1}, e_{k+2}; every higher-dimensional statement used by
the package reduces to it.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NotConvex
from .profiles import ProfileFunction, TrigProfile

ENDPOINT_GUARD = 1e-6


@dataclass
class SphericalPoint:
    """r > 0, orbit angle theta and unit vectors xi1 (in R^k) and xi2 (in R^(n-k)).

    For k = 1 the first block is one-dimensional and theta ranges over (0, pi);
    ``xi1`` is then the trivial vector (1,).
    """

    r: float
    theta: float
    xi1: np.ndarray
    xi2: np.ndarray

    @classmethod
    def from_cartesian(cls, y, k: int) -> "SphericalPoint":
        y = np.asarray(y, dtype=float)
        a, b = y[:k], y[k:]
        na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
        if nb == 0.0 or (k > 1 and na == 0.0):
            raise DomainError("point lies on a singular orbit of the chart")
        r = float(np.linalg.norm(y))
        if k == 1:
            return cls(r, math.atan2(nb, a[0]), np.ones(1), b / nb)
        return cls(r, math.atan2(nb, na), a / na, b / nb)

    def to_cartesian(self) -> np.ndarray:
        if len(self.xi1) == 1:
            head = np.array([self.r * math.cos(self.theta)])
        else:
            head = self.r * math.cos(self.theta) * self.xi1
        return np.concatenate([head, self.r * math.sin(self.theta) * self.xi2])


@dataclass
class SphericalMetric3:
    g_rr: float
    g_rtheta: float
    g_thetatheta: float
    g_phiphi: float
    f: ProfileFunction = field(repr=False, default=None)

    def matrix(self) -> np.ndarray:
        return np.array([[self.g_rr, self.g_rtheta, 0.0],
                         [self.g_rtheta, self.g_thetatheta, 0.0],
                         [0.0, 0.0, self.g_phiphi]])

    @property
    def inv_thetatheta(self) -> float:
        return self.g_rr / (self.g_rr * self.g_thetatheta - self.g_rtheta**2)


def _check_theta(theta: float, upper: float = math.pi) -> None:
    if not ENDPOINT_GUARD < theta < upper - ENDPOINT_GUARD:
        raise DomainError(f"theta={theta} is at or beyond the chart boundary")


def spherical_metric(f: ProfileFunction, r: float, theta: float) -> SphericalMetric3:
    _check_theta(theta)
    if r <= 0:
        raise DomainError("r must be positive")
    f0, f1, f2 = f.derivatives(theta, 2)
    s, c = math.sin(theta), math.cos(theta)
    return SphericalMetric3(2 * f0, r * f1, r * r * (2 * f0 + f2),
                            r * r * (2 * s * s * f0 + s * c * f1), f)


def spherical_cartan(f: ProfileFunction, r: float, theta: float) -> tuple[float, float]:
    """(C_theta theta theta, C_theta phi phi)."""
    _check_theta(theta)
    _, f1, f2, f3 = f.derivatives(theta, 3)
    ctt = r * r * (2 * f1 + 0.5 * f3)
    cpp = r * r * (-0.5 * math.cos(2 * theta) * f1 + 0.25 * math.sin(2 * theta) * f2)
    return float(ctt), float(cpp)


def curvature_component(f: ProfileFunction, r: float, theta: float) -> float:
    """R_theta phi phi theta = C_ttt g^tt C_tpp - C_tpp^2 g^pp.

    The second term comes from the phi-phi entry of the inverse metric and does
    not vanish in general.
    """
    g = spherical_metric(f, r, theta)
    ctt, cpp = spherical_cartan(f, r, theta)
    return ctt * g.inv_thetatheta * cpp - cpp * cpp / g.g_phiphi


def reduced_curvature_component(f: ProfileFunction, r: float, theta: float) -> float:
    """The single product C_ttt g^tt C_tpp, without the g^pp contribution."""
    g = spherical_metric(f, r, theta)
    ctt, cpp = spherical_cartan(f, r, theta)
    return ctt * g.inv_thetatheta * cpp


def genericity_condition(f: ProfileFunction, t):
    """-cos t sin t f'' + (cos^2 t - sin^2 t) f'; works elementwise on arrays."""
    d = f.derivatives(t, 2)
    return -np.cos(t) * np.sin(t) * d[2] + np.cos(2 * np.asarray(t)) * d[1]


def euclidean_profile(c1: float, c2: float, n: int = 3) -> tuple[TrigProfile, np.ndarray]:
    """f = c1 + c2 cos 2t together with the matrix Q of E = y^T Q y."""
    if c1 <= abs(c2):
        raise NotConvex("need c1 > |c2|")
    Q = np.diag([c1 + c2] + [c1 - c2] * (n - 1))
    return TrigProfile([c1, 0.0, c2]), Q


@dataclass
class ValidityReport:
    """Theta-intervals in (0, pi) where the spherical metric is positive definite."""

    intervals: list
    gphiphi_roots: list

    def contains(self, theta: float) -> bool:
        return any(lo < theta < hi for lo, hi in self.intervals)

    def to_json(self) -> dict:
        return {"intervals": [list(iv) for iv in self.intervals], "gphiphi_roots": list(self.gphiphi_roots)}


def _definiteness(f: ProfileFunction, theta: float) -> float:
    """Continuous indicator, positive iff the (r, theta, phi) metric is positive definite."""
    g = spherical_metric(f, 1.0, theta)
    det2 = g.g_rr * g.g_thetatheta - g.g_rtheta**2
    return min(g.g_rr, det2, g.g_phiphi / math.sin(theta))


def validity_intervals(f: ProfileFunction, upper: float = math.pi, grid: int = 2001) -> list:
    ts = np.linspace(ENDPOINT_GUARD * 2, upper - ENDPOINT_GUARD * 2, grid)
    vals = np.array([_definiteness(f, t) for t in ts])
    out = []
    start = ts[0] if vals[0] > 0 else None
    for i in range(1, len(ts)):
        if (vals[i - 1] > 0) != (vals[i] > 0):
            root = brentq(lambda t: _definiteness(f, t), ts[i - 1], ts[i], xtol=1e-14)
            if vals[i] > 0:
                start = root
            else:
                out.append((float(start), float(root)))
                start = None
    if start is not None:
        out.append((float(start), float(ts[-1])))
    return out


def rem0040_profile(c1: float, c2: float, c3: float) -> tuple[TrigProfile, ValidityReport]:
    """f = c1 + c2 cos 2t + c3 sin 2t and the theta-intervals where g is positive definite.

    The profile is not even when c3 != 0, so a norm built from it must skip
    the evenness check (``ProfileNorm(..., strict=False)``).
    """
    if c1 <= 0:
        raise ValueError("need c1 > 0")
    f = TrigProfile([c1, 0.0, c2], [0.0, 0.0, c3])
    roots = []
    if c3 != 0.0:
        # (c1 - c2) sin t + c3 cos t = 0
        roots.append(float(math.atan2(-c3, c1 - c2) % math.pi))
    return f, ValidityReport(validity_intervals(f), roots)


# -- chart change (oracle support) -------------------------------------------


def chart_jacobian(r: float, theta: float, phi: float, n: int = 3, k: int = 1):
    """Point and d(x)/d(r, theta, phi) for the 3-space spanned by e_1, e_{k+1}, e_{k+2}."""
    s, c = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    y = np.zeros(n)
    J = np.zeros((n, 3))
    i, j, l = 0, k, k + 1
    y[i], y[j], y[l] = r * c, r * s * cp, r * s * sp
    J[i] = [c, -r * s, 0.0]
    J[j] = [s * cp, r * c * cp, -r * s * sp]
    J[l] = [s * sp, r * c * sp, r * s * cp]
    return y, J


def grid_rows(f: ProfileFunction, thetas, r: float = 1.0) -> list[dict]:
    rows = []
    for th in thetas:
        g = spherical_metric(f, r, th)
        ctt, cpp = spherical_cartan(f, r, th)
        rows.append({"theta": float(th), "g_rr": g.g_rr, "g_rtheta": g.g_rtheta,
                     "g_thetatheta": g.g_thetatheta, "g_phiphi": g.g_phiphi,
                     "C_thetathetatheta": ctt, "C_thetaphiphi": cpp,
                     "R_thetaphiphitheta": curvature_component(f, r, th),
                     "genericity": float(genericity_condition(f, th))})
    return rows


def grid_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(float(v)) for k, v in row.items()})
    return buf.getvalue()


def theta_grid(count: int, upper: float = math.pi, avoid=(math.pi / 2,), gap: float = 1e-6) -> np.ndarray:
    """Uniform grid on (0, upper) excluding ``gap``-neighbourhoods of the endpoints and ``avoid``."""
    ts = np.linspace(0.0, upper, count + 2)[1:-1]
    keep = (ts > gap) & (ts < upper - gap)
    for a in avoid:
        keep &= np.abs(ts - a) > gap
    return ts[keep]
