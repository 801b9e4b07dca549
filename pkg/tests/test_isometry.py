import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessmink import isometry as iso
from hessmink.errors import (DegenerateDenominator, DomainError, FitFailure, InsufficientSamples, NonPositiveH,
                             NotOrbitPreserving, RootNotBracketed)
from hessmink.legendre import LinearMap, verify_hessian_isometry
from hessmink.norms import ProfileNorm, sample_points
from hessmink.profiles import TrigProfile

F = TrigProfile([1.0, 0.0, 0.15, 0.0, 0.03], period=math.pi)
NORM = ProfileNorm(1, 3, F)
BAND = (0.15, 0.65)
ts_generic = st.floats(0.1, 1.45).filter(lambda t: abs(t - iso.find_t_prime(F)) > 0.05)


def _samples_from(m, ts, k=1, n=3):
    return iso.sample_map_on_meridian(m, k, n, ts)


@given(ts_generic, st.floats(0.3, 2.5), st.floats(0.3, 2.5))
def test_closed_form_maps_solve_their_branch_odes(t, a, b):
    lin = iso.LinearTheta(a, b).derivs(t, 1)
    assert math.isclose(lin[1], iso.linear_branch(t, lin[0]), rel_tol=1e-10)
    leg = iso.LegendreTheta(F, a, b).derivs(t, 1)
    assert math.isclose(leg[1], iso.legendre_branch(F, t, leg[0]), rel_tol=1e-9)


@given(ts_generic, st.floats(0.1, 1.45))
def test_branch_quadratic_roots_and_discriminant(t, theta):
    q = iso.branch_quadratic(F, t, theta)
    assert max(q.residuals()) < 1e-10
    assert math.isclose(q.roots[0], iso.linear_branch(t, theta), rel_tol=1e-12)
    assert math.isclose(q.roots[1], iso.legendre_branch(F, t, theta), rel_tol=1e-10)
    scale = q.B**2 + abs(4 * q.A * q.C)
    assert abs(q.discriminant - q.discriminant_closed) <= 1e-10 * scale
    assert q.discriminant_closed >= 0


def test_branch_quadratic_excludes_axis_points():
    with pytest.raises(DomainError):
        iso.branch_quadratic(F, math.pi / 2, 0.5)


def test_t_prime_is_a_root_and_legendre_map_is_singular_there():
    tp = iso.find_t_prime(F)
    P, Q = iso._PQ(F, tp)
    assert abs(P) < 1e-12 * abs(Q)
    with pytest.raises(DegenerateDenominator):
        iso.legendre_theta(F, 1.0, 1.0, tp)


def test_t_prime_needs_a_unique_sign_change():
    with pytest.raises(RootNotBracketed):
        iso.find_t_prime(TrigProfile([1.0] + [0.0] * 19 + [0.3]))


def test_solved_profile_matches_induced_oracle():
    m = iso.LegendreTheta(F, 1.3, 0.8)
    oracle = iso.InducedProfile(F, m, BAND)
    th0 = float(m.theta(0.4))
    h = iso.solve_h(F, m, float(oracle(th0)), th0, BAND)
    for t in np.linspace(BAND[0] + 0.02, BAND[1] - 0.02, 9):
        th = float(m.theta(t))
        assert np.allclose(h.derivatives(th, 2), oracle.derivatives(th, 2), rtol=1e-9)
        assert iso.equivariance_residual(F, h, m, t) < 1e-9
        assert iso.energy_residual(F, h, m, t) < 1e-8


def test_solve_h_rejects_bad_input():
    m = iso.LinearTheta(1.0, 2.0)
    with pytest.raises(NonPositiveH):
        iso.solve_h(F, m, -1.0, 0.5, BAND)
    with pytest.raises(DomainError):
        iso.solve_h(F, m, 1.0, 1.4, BAND)


def test_orbit_map_is_a_hessian_isometry(rng):
    m = iso.LegendreTheta(F, 1.3, 0.8)
    h = iso.InducedProfile(F, m, BAND)
    th = sorted(float(v) for v in m.theta(np.array(BAND)))
    src = ProfileNorm(1, 3, F, band=BAND)
    dst = ProfileNorm(1, 3, h, band=tuple(th), strict=False)
    inner = (BAND[0] + 0.02, BAND[1] - 0.02)
    pts = sample_points(ProfileNorm(1, 3, F, band=inner), 8, rng)
    assert verify_hessian_isometry(iso.OrbitMap(m, 1, 3), src, dst, pts).ok(1e-9)


@pytest.mark.parametrize("k,n", [(1, 3), (2, 4)])
def test_examples_are_isometries(k, n, rng):
    base = ProfileNorm(k, n, F)
    lin, target = iso.linear_example(-0.7 if k == 1 else 0.7, 1.4, k, n)
    pts = sample_points(base, 6, rng)
    assert verify_hessian_isometry(lin, base, target(base), pts).ok(1e-12)
    leg, dual_target = iso.legendre_example(base, 0.9, 1.2, k)
    assert verify_hessian_isometry(leg, base, dual_target, pts).ok(1e-8)


@pytest.mark.parametrize("branch", ["linear", "legendre"])
def test_classify_recovers_branch_and_parameters(branch):
    a, b = -0.8, 1.7
    if branch == "linear":
        m, _ = iso.linear_example(a, b, 1, 3)
    else:
        m, _ = iso.legendre_example(NORM, a, b, 1)
    c = iso.classify(F, _samples_from(m, np.linspace(*BAND, 30)))
    assert c.verdict == branch
    assert np.allclose(c.model.params, (a, b), rtol=1e-7)
    assert c.to_json()["verdict"] == branch


def test_classify_detects_a_glued_map():
    from hessmink.constructions import build_glued

    g = build_glued([(0.5, 0.3, 0.1), (1.6, 0.45, 0.1)])
    c = iso.classify(g.F1.f, _samples_from(g.map, np.linspace(0.1, 2.2, 211)))
    assert c.verdict == "glued" and len(c.boundaries) == 1
    left, right = c.boundaries[0]
    assert 0.7 < left < right < 1.25
    assert [seg[2].to_json()["kind"] for seg in c.model.segments] == ["linear", "legendre"]


def test_classify_flags_maps_on_neither_branch():
    ts = np.linspace(*BAND, 30)
    samples = iso.ThetaSamples(ts, ts + 0.1 * np.sin(3 * ts), 1 + 0.3 * np.cos(3 * ts))
    assert iso.classify(F, samples).verdict == "indeterminate"


def test_classify_needs_enough_samples():
    m, _ = iso.linear_example(1.0, 2.0, 1, 3)
    with pytest.raises(InsufficientSamples):
        iso.classify(F, _samples_from(m, np.linspace(*BAND, 5)))


def test_classify_bands_reports_each_generic_band():
    m, _ = iso.linear_example(1.0, 2.0, 1, 3)
    rep = iso.classify_bands(F, _samples_from(m, np.linspace(0.1, 0.7, 40)), 0.1, 0.7)
    assert rep["bands"] and all(b["verdict"] == "linear" for b in rep["bands"])


def test_flat_bands_give_linear_models_and_reject_curved_profiles():
    f, _ = __import__("hessmink.spherical", fromlist=["x"]).euclidean_profile(1.0, 0.3)
    m, _ = iso.linear_example(-1.2, 0.6, 1, 3)
    samples = _samples_from(m, np.linspace(0.1, 1.4, 30))
    assert np.allclose(iso.classify_flat(f, samples, (0.1, 1.4)).params, (-1.2, 0.6), rtol=1e-9)
    with pytest.raises(FitFailure):
        iso.classify_flat(F, samples, (0.1, 1.4))
    assert iso.generic_bands(f, 0.1, 1.4) == []


def test_theta_samples_round_trip_json():
    s = iso.ThetaSamples.from_theta_map(iso.LinearTheta(1.0, 2.0), np.linspace(0.2, 1.0, 12))
    back = iso.ThetaSamples.from_json(s.to_json())
    assert np.array_equal(back.t, s.t) and np.array_equal(back.theta_values, s.theta_values)


@pytest.mark.parametrize("k,n", [(1, 3), (2, 4), (2, 5)])
def test_decompose_recovers_rotation_and_meridian_map(k, n, rng):
    Q, _ = np.linalg.qr(rng.standard_normal((n - k, n - k)))
    outer = np.eye(n)
    outer[k:, k:] = Q
    m = iso.OrbitMap(iso.LinearTheta(0.8, 1.5), k, n, outer=outer)
    src = [y for y in rng.standard_normal((40, n))]
    d = iso.decompose(src, [m(y) for y in src], k)
    assert np.allclose(d.linear.matrix, outer, atol=1e-10) and d.reconstruction_error < 1e-10
    s = d.numeric.theta_map
    assert np.allclose(s.theta_values, iso.linear_theta(0.8, 1.5, s.t), atol=1e-10)


def test_decompose_rejects_maps_that_mix_orbits(rng):
    M = LinearMap(np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.2, 0.0, 1.0]]))
    src = [y for y in rng.standard_normal((20, 3))]
    with pytest.raises(NotOrbitPreserving):
        iso.decompose(src, [M(y) for y in src], 1)


@given(st.floats(0.2, 1.3), st.floats(0.5, 2.0), st.floats(0.5, 2.0), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_mixed_branches_predict_opposite_off_diagonal_signs(t, a1, b1, a2, b2):
    y = np.array([math.cos(t), math.sin(t), 0.0])
    chk = iso.mixed_branch_check(NORM, y, 1, (a1, b1), (a2, b2))
    if abs(chk.a12) > 1e-9:
        assert chk.opposite_signs and chk.mismatch > 0
