import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hessmink.errors import InversionFailure
from hessmink.legendre import (DualNorm, LegendreMap, LinearMap, dual_norm, fd_jacobian, invert_legendre,
                               involution_error, legendre_map, map_homogeneity_error, nonlinearity_witness,
                               verify_hessian_isometry)
from hessmink.norms import Euclidean, ExpressionNorm, sample_points
from test_norms import QUARTIC, PROFILE, RANDERS


@given(arrays(float, 3, elements=st.floats(-2, 2)).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_euclidean_dual_is_inverse_matrix(y):
    A = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]])
    dual = dual_norm(Euclidean(A))
    assert isinstance(dual, Euclidean)
    assert np.allclose(dual.A, np.linalg.inv(A))
    assert np.isclose(DualNorm(Euclidean(A)).E(y), 0.5 * y @ np.linalg.solve(A, y), rtol=1e-11)


@pytest.mark.parametrize("spec", [RANDERS, PROFILE, QUARTIC], ids=["randers", "profile", "quartic"])
def test_legendre_map_is_an_involutive_isometry(spec, rng):
    pts = sample_points(spec, 6, rng)
    for y in pts:
        assert involution_error(spec, y) < 1e-10
    assert verify_hessian_isometry(LegendreMap(spec), spec, DualNorm(spec), pts).ok(1e-8)


def test_dual_hessian_is_inverse_hessian(rng):
    dual = DualNorm(RANDERS)
    for y in sample_points(RANDERS, 4, rng):
        p = legendre_map(RANDERS, y)
        assert np.allclose(dual.hess(p) @ RANDERS.hess(y), np.eye(3), atol=1e-9)
        assert np.isclose(dual.E(p), RANDERS.E(y), rtol=1e-12)


def test_legendre_jacobian_matches_finite_differences():
    m = LegendreMap(RANDERS)
    y = np.array([0.8, -0.4, 1.1])
    assert np.allclose(m.jacobian(y), fd_jacobian(m, y), atol=1e-6)


def test_legendre_map_is_homogeneous_and_nonlinear(rng):
    pts = sample_points(RANDERS, 5, rng)
    assert map_homogeneity_error(LegendreMap(RANDERS), pts, [0.3, 2.0, 5.0, 0.7, 11.0]) < 1e-13
    assert nonlinearity_witness(RANDERS, zip(pts[:-1], pts[1:])) > 1e-3
    assert nonlinearity_witness(Euclidean(np.eye(3)), zip(pts[:-1], pts[1:])) < 1e-14


def test_linear_map_pulls_back_euclidean_metrics():
    M = np.array([[1.0, 2.0], [0.0, 1.0]])
    A = np.eye(2)
    B = np.linalg.inv(M).T @ A @ np.linalg.inv(M)
    rep = verify_hessian_isometry(LinearMap(M), Euclidean(A), Euclidean(B), [np.array([1.0, 0.3])])
    assert rep.max_residual < 1e-14


def test_inversion_outside_image_cone_fails():
    spec = ExpressionNorm("(* 0.5 (+ (* x1 x1) (* x2 x2)))", 2, cone=[[1.0, 0.0]])
    with pytest.raises(InversionFailure):
        invert_legendre(spec, [-1.0, 0.2])
