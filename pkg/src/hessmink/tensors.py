"""Fundamental, Cartan and curvature tensors of the Hessian metric g = d^2 E.

The curvature of a Hessian metric only involves g and the Cartan tensor, so it
is computed from exact jets.  :func:`fd_riemann_oracle` rebuilds the same tensor
from Christoffel symbols by finite differences and exists for cross-checks.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import DegeneratePlane, NotPositiveDefinite, OutOfCone
from .norms import NormSpec, as_point


@dataclass
class FundamentalTensor:
    g: np.ndarray
    point: np.ndarray


@dataclass
class CartanTensorValue:
    C: np.ndarray
    point: np.ndarray


@dataclass
class CurvatureTensor:
    R: np.ndarray
    point: np.ndarray

    def scale(self) -> float:
        return float(np.abs(self.R).max()) + 1e-300

    def symmetry_residuals(self) -> dict[str, float]:
        """Absolute residuals of the algebraic curvature identities."""
        R = self.R
        return {
            "antisym_ij": float(np.abs(R + R.transpose(1, 0, 2, 3)).max()),
            "antisym_kl": float(np.abs(R + R.transpose(0, 1, 3, 2)).max()),
            "pair_sym": float(np.abs(R - R.transpose(2, 3, 0, 1)).max()),
            "bianchi": float(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)).max()),
        }


def _inverse_spd(g: np.ndarray, y) -> np.ndarray:
    try:
        fac = cho_factor(g)
    except LinAlgError:
        raise NotPositiveDefinite(f"Hessian of E is not positive definite at {np.asarray(y)}") from None
    return cho_solve(fac, np.eye(len(g)))


def fundamental_tensor(spec: NormSpec, y) -> FundamentalTensor:
    y = as_point(y, spec.n)
    g = spec.hess(y)
    _inverse_spd(g, y)
    return FundamentalTensor(g, y)


def cartan_tensor(spec: NormSpec, y) -> CartanTensorValue:
    y = as_point(y, spec.n)
    return CartanTensorValue(0.5 * spec.jet3(y).third, y)


def curvature_from_jets(g: np.ndarray, C: np.ndarray, y=None) -> np.ndarray:
    """R_ijkl = C_ils g^sr C_jkr - C_iks g^sr C_jlr."""
    ginv = _inverse_spd(g, y)
    M = np.einsum("ils,sr,jkr->ijkl", C, ginv, C)
    return M - M.transpose(0, 1, 3, 2)


def curvature_tensor(spec: NormSpec, y) -> CurvatureTensor:
    y = as_point(y, spec.n)
    j = spec.jet3(y)
    return CurvatureTensor(curvature_from_jets(j.hess, 0.5 * j.third, y), y)


def christoffel(spec: NormSpec, y, h: float | None = None) -> np.ndarray:
    """Gamma^m_ij of g from central differences of the Hessian (last index up)."""
    y = as_point(y, spec.n)
    h = 1e-3 * np.linalg.norm(y) if h is None else h
    return _christoffel(lambda p: _hess_in_cone(spec, p), y, h)


def _hess_in_cone(spec: NormSpec, p: np.ndarray) -> np.ndarray:
    if not spec.in_cone(p):
        raise OutOfCone("finite-difference stencil leaves the validity cone")
    return spec.hess(p)


def _dg(hess, y, h):
    """dg[a, i, j] = d_a g_ij with one Richardson pass."""
    n = len(y)
    out = np.empty((n, n, n))
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        d1 = (hess(y + e) - hess(y - e)) / (2 * h)
        d2 = (hess(y + 2 * e) - hess(y - 2 * e)) / (4 * h)
        out[a] = (4 * d1 - d2) / 3
    return out


def _christoffel(hess, y, h):
    dg = _dg(hess, y, h)
    # lower[i, j, l] = (d_i g_jl + d_j g_il - d_l g_ij)/2
    lower = 0.5 * (dg + np.einsum("jil->ijl", dg) - np.einsum("lij->ijl", dg))
    ginv = np.linalg.inv(hess(y))
    return np.einsum("ijl,lm->ijm", lower, ginv)


def fd_riemann_oracle(spec: NormSpec, y, h: float | None = None) -> CurvatureTensor:
    """Riemann tensor from finite-difference Christoffel symbols.

    Convention R_ijkl = g(R(d_i, d_j) d_k, d_l) with
    R(X, Y) = nabla_Y nabla_X - nabla_X nabla_Y + nabla_[X,Y], the one in which
    the Cartan-tensor formula of :func:`curvature_tensor` holds.
    The default step is 1e-3 |y|; both differentiation levels use one
    Richardson pass, so truncation error is O(h^4) while the nested
    differences keep rounding error near eps / h^2.
    """
    y = as_point(y, spec.n)
    if not spec.in_cone(y):
        raise OutOfCone("point outside the validity cone")
    h = 1e-3 * float(np.linalg.norm(y)) if h is None else h
    hess = lambda p: _hess_in_cone(spec, p)  # noqa: E731
    n = len(y)
    G = _christoffel(hess, y, h)
    dG = np.empty((n, n, n, n))  # dG[a, i, j, m] = d_a Gamma^m_ij
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        d1 = (_christoffel(hess, y + e, h) - _christoffel(hess, y - e, h)) / (2 * h)
        d2 = (_christoffel(hess, y + 2 * e, h) - _christoffel(hess, y - 2 * e, h)) / (4 * h)
        dG[a] = (4 * d1 - d2) / 3
    # R(d_i, d_j) d_k = (d_j G^m_ik - d_i G^m_jk + G^p_ik G^m_jp - G^p_jk G^m_ip) d_m
    up = (np.einsum("jikm->ijkm", dG) - dG
          + np.einsum("ikp,jpm->ijkm", G, G) - np.einsum("jkp,ipm->ijkm", G, G))
    return CurvatureTensor(np.einsum("ijkm,ml->ijkl", up, hess(y)), y)


def sectional_curvature(spec: NormSpec, y, u, v) -> float:
    y = as_point(y, spec.n)
    j = spec.jet3(y)
    R = curvature_from_jets(j.hess, 0.5 * j.third, y)
    return _sectional(j.hess, R, np.asarray(u, float), np.asarray(v, float))


def _sectional(g, R, u, v) -> float:
    guu, gvv, guv = u @ g @ u, v @ g @ v, u @ g @ v
    den = guu * gvv - guv**2
    if den < 1e-12 * max(guu * gvv, 1e-300):
        raise DegeneratePlane("u and v are (nearly) g-linearly dependent")
    # in this sign convention R(u, v, u, v) = g(R(u, v)v, u) in the usual one
    return float(np.einsum("ijkl,i,j,k,l->", R, u, v, u, v) / den)


def indicatrix_sectional_curvature(spec: NormSpec, y, u, v) -> float:
    """Sectional curvature of the indicatrix (with the induced metric) at y/F(y).

    ``u`` and ``v`` are projected onto the g-orthogonal complement of y, which
    is the tangent space of the indicatrix.  Uses the cone relation
    K_indicatrix = 1 + F^2 K_cone, with the cone curvature evaluated at y.
    """
    y = as_point(y, spec.n)
    j = spec.jet3(y)
    g = j.hess
    F2 = 2.0 * j.value
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    u = u - (u @ g @ y) / F2 * y
    v = v - (v @ g @ y) / F2 * y
    R = curvature_from_jets(g, 0.5 * j.third, y)
    return 1.0 + F2 * _sectional(g, R, u, v)


def cone_decomposition_residual(spec: NormSpec, y) -> float:
    """Max mismatch in g = dF (x) dF + F^2 g_S, where g_S is read off tangent to the indicatrix.

    Tangent vectors split as w = c y + w_T with g(y, w_T) = 0.  The identity
    holds iff g(y, w_T) = 0 coincides with dF(w_T) = 0 and g(y, y) = F^2, which is
    what is measured (relative to |g|).
    """
    y = as_point(y, spec.n)
    j = spec.jet3(y)
    g = j.hess
    F = np.sqrt(2.0 * j.value)
    dF = j.grad / F
    n = len(y)
    # projector onto ker dF along y
    P = np.eye(n) - np.outer(y, dF) / F
    gS = P.T @ g @ P / F**2
    rebuilt = np.outer(dF, dF) + F**2 * gS
    return float(np.abs(rebuilt - g).max() / np.abs(g).max())


def radial_geodesic_residual(spec: NormSpec, y, h: float | None = None) -> float:
    """Component of Gamma(y)(y, y) orthogonal to y, relative to its size."""
    G = christoffel(spec, y, h)
    y = np.asarray(y, float)
    acc = np.einsum("ijm,i,j->m", G, y, y)
    perp = acc - (acc @ y) / (y @ y) * y
    return float(np.linalg.norm(perp) / (np.linalg.norm(acc) + np.abs(G).max() * (y @ y)))


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(a).max(), np.abs(b).max()) + 1e-300
    return float(np.abs(a - b).max() / scale)


# -- output -----------------------------------------------------------------


def tensor_csv(T: np.ndarray) -> str:
    names = "ijkl"[: T.ndim]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names) + ["value"])
    for idx in itertools.product(*(range(s) for s in T.shape)):
        w.writerow(list(idx) + [repr(float(T[idx]))])
    return buf.getvalue()


def tensor_summary(spec: NormSpec, y, norm_id: str = "") -> dict:
    """JSON-ready record of g, C, R at y with their invariant residuals."""
    y = as_point(y, spec.n)
    j = spec.jet3(y)
    g = j.hess
    C = 0.5 * j.third
    R = CurvatureTensor(curvature_from_jets(g, C, y), y)
    F2 = 2.0 * j.value
    cy = np.einsum("ijk,k->ij", C, y)
    res = {
        "g_yy_minus_F2": float(abs(y @ g @ y - F2) / F2),
        "min_eigenvalue_g": float(np.linalg.eigvalsh(g)[0]),
        "cartan_y_contraction": float(np.abs(cy).max() / (np.abs(C).max() + 1e-300)),
        "cone_decomposition": cone_decomposition_residual(spec, y),
    }
    # curvature terms are products C g^-1 C; rounding in R is relative to that size
    natural = float(np.abs(C).max() ** 2 * np.abs(np.linalg.inv(g)).max())
    res.update({k: v / max(R.scale(), natural, 1e-300) for k, v in R.symmetry_residuals().items()})
    return {
        "norm": norm_id or spec.kind,
        "point": y.tolist(),
        "E": j.value,
        "g": g.tolist(),
        "curvature_max_abs": float(np.abs(R.R).max()),
        "residuals": res,
    }


def dumps_summary(summary: dict) -> str:
    return json.dumps(summary, indent=2)
