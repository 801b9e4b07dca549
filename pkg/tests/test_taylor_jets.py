import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessmink import taylor
from hessmink.errors import NonSmoothPoint
from hessmink.jets import Jet3, atan2, norm_sq
from hessmink.taylor import Series

points = st.floats(-2.0, 2.0)


@given(points)
def test_series_sin_cos_exp_match_closed_forms(t):
    s, c = Series.variable(t, 4).sincos()
    assert np.allclose(s.derivatives(), [math.sin(t), math.cos(t), -math.sin(t), -math.cos(t), math.sin(t)],
                       atol=1e-13)
    assert np.allclose(c.derivatives()[:2], [math.cos(t), -math.sin(t)], atol=1e-13)
    e = Series.variable(t, 3).exp()
    assert np.allclose(e.derivatives(), [math.exp(t)] * 4, rtol=1e-13)


@given(points)
def test_series_atan_and_log(t):
    a = Series.variable(t, 3).atan()
    q = 1 + t * t
    assert np.allclose(a.derivatives(), [math.atan(t), 1 / q, -2 * t / q**2, (6 * t * t - 2) / q**3], atol=1e-13)
    x = Series.variable(t, 3) * Series.variable(t, 3) + 1.0
    lg = x.log()
    assert np.allclose(lg.derivative().derivatives(), (Series.variable(t, 2) * 2.0 / (x.truncate(2))).derivatives(),
                       atol=1e-12)


@given(st.floats(-3.0, 3.0))
def test_series_atan2_is_continuous_angle(phi):
    s, c = Series.variable(phi, 3).sincos()
    ang = taylor.atan2(s * 2.0, c * 2.0)
    assert math.isclose(math.remainder(ang.value - phi, 2 * math.pi), 0.0, abs_tol=1e-12)
    assert np.allclose(ang.derivatives()[1:], [1.0, 0.0, 0.0], atol=1e-12)


def test_series_compose_matches_direct_evaluation():
    t = 0.7
    inner = Series.variable(t, 3) * 2.0
    via_compose = inner.compose([math.sin(1.4), math.cos(1.4), -math.sin(1.4), -math.cos(1.4)])
    direct = inner.sin()
    assert np.allclose(via_compose.c, direct.c, atol=1e-14)


def _fd_grad(fn, y, h=1e-5):
    out = []
    for i in range(len(y)):
        e = np.zeros(len(y))
        e[i] = h
        out.append((fn(y + e) - fn(y - e)) / (2 * h))
    return np.array(out)


def _sample_function(xs):
    x, y, z = xs
    return (x * y + z * z).sqrt() * atan2(y, x) + x / (z * z + 1.0)


def _sample_float(v):
    x, y, z = v
    return math.sqrt(x * y + z * z) * math.atan2(y, x) + x / (z * z + 1.0)


@given(st.tuples(st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.floats(-1.0, 1.0)))
def test_jet_derivatives_match_finite_differences(p):
    y = np.array(p)
    j = _sample_function(Jet3.coordinates(y))
    assert math.isclose(j.value, _sample_float(y), rel_tol=1e-13)
    assert np.allclose(j.grad, _fd_grad(_sample_float, y), atol=1e-7)
    grad_fd = _fd_grad(lambda q: _sample_function(Jet3.coordinates(q)).grad, y)
    assert np.allclose(j.hess, grad_fd, atol=1e-6)
    hess_fd = _fd_grad(lambda q: _sample_function(Jet3.coordinates(q)).hess, y)
    assert np.allclose(j.third, hess_fd, atol=1e-5)


def test_jet_third_derivative_is_symmetric():
    j = _sample_function(Jet3.coordinates(np.array([0.8, 1.1, 0.4])))
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.allclose(j.third, j.third.transpose(perm), atol=1e-14)


def test_jet_sqrt_at_zero_is_non_smooth():
    with pytest.raises(NonSmoothPoint):
        Jet3.constant(0.0, 2).sqrt()


def test_norm_sq_is_quadratic():
    j = norm_sq(Jet3.coordinates([1.0, 2.0]))
    assert j.value == 5.0 and np.allclose(j.hess, 2 * np.eye(2)) and not j.third.any()
