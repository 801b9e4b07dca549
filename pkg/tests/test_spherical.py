import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessmink import spherical as sph
from hessmink import tensors
from hessmink.errors import DomainError, NotConvex
from hessmink.norms import Euclidean, ProfileNorm
from hessmink.profiles import TrigProfile

F = TrigProfile([1.0, 0.0, 0.1, 0.0, 0.03], period=math.pi)
NORM = ProfileNorm(1, 3, F)
thetas = st.floats(0.05, math.pi - 0.05).filter(lambda t: abs(t - math.pi / 2) > 1e-3)


@given(thetas, st.floats(0.3, 3.0))
def test_chart_metric_and_cartan_match_cartesian_tensors(theta, r):
    y, J = sph.chart_jacobian(r, theta, 0.0)
    assert np.allclose(J.T @ NORM.hess(y) @ J, sph.spherical_metric(F, r, theta).matrix(), atol=1e-12)
    C = tensors.cartan_tensor(NORM, y).C
    ctt, cpp = sph.spherical_cartan(F, r, theta)
    Jt, Jp = J[:, 1], J[:, 2]
    assert np.isclose(np.einsum("ijk,i,j,k", C, Jt, Jt, Jt), ctt, atol=1e-11 * r * r)
    assert np.isclose(np.einsum("ijk,i,j,k", C, Jt, Jp, Jp), cpp, atol=1e-11 * r * r)


@given(thetas)
def test_chart_curvature_component_matches_cartesian_curvature(theta):
    y, J = sph.chart_jacobian(1.0, theta, 0.0)
    R = tensors.curvature_tensor(NORM, y).R
    Jt, Jp = J[:, 1], J[:, 2]
    full = np.einsum("ijkl,i,j,k,l", R, Jt, Jp, Jp, Jt)
    assert np.isclose(full, sph.curvature_component(F, 1.0, theta), atol=1e-12)


def test_reduced_component_misses_a_nonzero_term():
    th = 0.9
    gap = sph.reduced_curvature_component(F, 1.0, th) - sph.curvature_component(F, 1.0, th)
    _, cpp = sph.spherical_cartan(F, 1.0, th)
    assert np.isclose(gap, cpp**2 / sph.spherical_metric(F, 1.0, th).g_phiphi)
    assert abs(gap) > 1e-4


@given(st.floats(0.5, 3.0), st.floats(-0.45, 0.45), thetas)
def test_euclidean_profiles_are_flat_and_non_generic(c1, ratio, theta):
    f, Q = sph.euclidean_profile(c1, ratio * c1)
    y, _ = sph.chart_jacobian(1.0, theta, 0.0)
    assert np.isclose(Euclidean(2 * Q).E(y), float(f(theta)) * (y @ y), rtol=1e-13)
    assert abs(sph.curvature_component(f, 1.0, theta)) < 1e-12 * c1
    assert abs(sph.genericity_condition(f, theta)) < 1e-12 * c1


def test_euclidean_profile_needs_convexity():
    with pytest.raises(NotConvex):
        sph.euclidean_profile(1.0, 1.0)


def test_round_trip_through_spherical_coordinates():
    y = np.array([0.3, -1.2, 0.5, 2.0])
    p = sph.SphericalPoint.from_cartesian(y, 2)
    assert np.allclose(p.to_cartesian(), y)
    with pytest.raises(DomainError):
        sph.SphericalPoint.from_cartesian([1.0, 0.0, 0.0], 1)


def test_tilted_profile_loses_definiteness_where_g_phiphi_vanishes():
    c1, c2, c3 = 1.0, 0.2, 0.5
    f, report = sph.rem0040_profile(c1, c2, c3)
    (root,) = report.gphiphi_roots
    assert np.isclose((c1 - c2) * math.sin(root) + c3 * math.cos(root), 0.0, atol=1e-14)
    assert abs(sph.spherical_metric(f, 1.0, root).g_phiphi) < 1e-13
    assert not report.contains(root)
    assert any(np.isclose(root, end, atol=1e-8) for iv in report.intervals for end in iv)


@pytest.mark.parametrize("theta", [0.0, 1e-9, math.pi])
def test_chart_boundary_is_a_domain_error(theta):
    with pytest.raises(DomainError):
        sph.spherical_metric(F, 1.0, theta)


def test_grid_avoids_excluded_angles_and_csv_round_trips():
    grid = sph.theta_grid(101)
    assert np.all(np.abs(grid - math.pi / 2) > 1e-6)
    rows = sph.grid_rows(F, grid[:3])
    lines = sph.grid_csv(rows).splitlines()
    assert lines[0].startswith("theta,") and float(lines[1].split(",")[0]) == rows[0]["theta"]
