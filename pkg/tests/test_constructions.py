import math

import numpy as np
import pytest

from hessmink import constructions as cons
from hessmink.errors import ConvexityLost, LengthMismatch, OverlappingSupports, SpecError
from hessmink.legendre import LegendreMap, verify_hessian_isometry
from hessmink.norms import Euclidean, Randers, sample_points
from test_norms import RANDERS

DEFORMATIONS = [(0.6, 0.3, 0.1), (1.9, 0.35, 0.1)]


@pytest.fixture(scope="module")
def glued():
    return cons.build_glued(DEFORMATIONS)


def test_glued_map_is_an_isometry_across_the_seams(glued):
    pts = cons.boundary_dense_samples(glued, rng=np.random.default_rng(3))
    assert verify_hessian_isometry(glued.map, glued.F1, glued.F2, pts).ok(1e-9)
    assert cons.boundary_jump(glued) < 1e-12


def test_glued_map_is_identity_on_one_support_and_legendre_on_the_other(glued):
    U1, U2 = glued.supports
    y1 = cons.meridian_point(0.5 * sum(U1), 1, 3, r=1.4, phase=0.2)
    y2 = cons.meridian_point(0.5 * sum(U2), 1, 3, r=1.4, phase=0.2)
    assert np.array_equal(glued.map(y1), y1)
    assert np.allclose(glued.map(y2), LegendreMap(glued.F1)(y2))
    assert not np.allclose(glued.map(y1), LegendreMap(glued.F1)(y1))


def test_undeformed_glue_is_euclidean(glued):
    y = cons.meridian_point(1.0, 1, 3, r=2.0)
    assert math.isclose(glued.F0.E(y), 0.5 * (y @ y))
    assert glued.to_json()["scale"] == glued.scale <= 1.0


def test_glue_input_validation():
    with pytest.raises(SpecError):
        cons.build_glued(DEFORMATIONS[:1])
    with pytest.raises(OverlappingSupports):
        cons.build_glued([(0.6, 0.3, 0.1), (0.9, 0.3, 0.1)])
    with pytest.raises(ConvexityLost):
        cons.build_glued([(0.6, 0.05, -0.45), (1.9, 0.3, 0.1)], max_halvings=0)


def test_large_bumps_are_scaled_until_convex():
    g = cons.build_glued([(0.6, 0.05, -0.45), (1.9, 0.3, 0.1)])
    assert g.scale < 1.0


def test_euclidean_indicatrix_has_length_two_pi():
    chart = cons.polar_chart_2d(Euclidean(np.diag([3.0, 0.5])))
    assert math.isclose(chart.arclength, 2 * math.pi, rel_tol=1e-12)
    assert chart.refinement_delta < 1e-10


def _restriction(spec):
    def e(phi):
        u = np.array([math.cos(phi), math.sin(phi)])
        du = np.array([-u[1], u[0]])
        j = spec.jet3(u)
        return j.value, float(j.grad @ du), float(du @ j.hess @ du - 2 * j.value)
    return e


def test_arclength_agrees_with_restriction_formula():
    spec = Randers(np.array([[1.0, 0.3], [0.3, 2.0]]), np.array([0.2, -0.4]))
    chart = cons.polar_chart_2d(spec)
    assert math.isclose(chart.arclength, cons.profile_arclength(_restriction(spec)), rel_tol=1e-10)
    for theta in (0.0, 0.7, 3.0, chart.arclength - 0.1):
        assert math.isclose(chart.theta_of_phi(chart.phi_of_theta(theta)), theta, abs_tol=1e-10)


def test_rotated_norms_are_matched_by_the_chart_map(rng):
    alpha = np.array([[1.0, 0.3], [0.3, 2.0]])
    beta = np.array([0.2, -0.4])
    c, s = math.cos(0.9), math.sin(0.9)
    R = np.array([[c, -s], [s, c]])
    A = Randers(alpha, beta)
    B = Randers(R @ alpha @ R.T, R @ beta)
    m = cons.two_d_isometry(A, B)
    assert cons.isometry_check_2d(m, sample_points(A, 5, rng)) < 1e-8


def test_different_lengths_are_reported():
    with pytest.raises(LengthMismatch):
        cons.two_d_isometry(Euclidean(np.eye(2)), Randers(np.eye(2), np.array([0.6, 0.0])))
    with pytest.raises(SpecError):
        cons.polar_chart_2d(RANDERS)
