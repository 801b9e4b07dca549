import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessmink import sexpr
from hessmink.errors import SpecError
from hessmink.profiles import BumpProfile, SplineProfile, TrigProfile


@given(st.floats(-4, 4))
def test_trig_profile_derivatives(t):
    f = TrigProfile([1.0, 0.0, 0.2, 0.0, 0.05], period=math.pi)
    d = f.derivatives(t, 3)
    assert math.isclose(d[0], 1 + 0.2 * math.cos(2 * t) + 0.05 * math.cos(4 * t), abs_tol=1e-14)
    assert math.isclose(d[1], -0.4 * math.sin(2 * t) - 0.2 * math.sin(4 * t), abs_tol=1e-14)
    assert math.isclose(d[3], 1.6 * math.sin(2 * t) + 3.2 * math.sin(4 * t), abs_tol=1e-13)


def test_trig_profile_rejects_odd_harmonics_for_period_pi():
    with pytest.raises(ValueError):
        TrigProfile([1.0, 0.1], period=math.pi)


def test_validate_reports_non_even_profiles():
    assert TrigProfile([1.0, 0.0, 0.2]).validate() == []
    assert "profile is not even" in TrigProfile([1.0, 0.0, 0.2], [0.0, 0.0, 0.1]).validate()


def test_bump_profile_is_flat_outside_support_and_even():
    f = BumpProfile(0.5, [(1.0, 0.3, 0.1)])
    assert np.allclose(f.derivatives(np.array([0.2, 1.5, 2.5]), 3)[1:], 0.0)
    assert np.allclose(f.derivatives(0.5, 0)[0], 0.5)
    assert math.isclose(float(f(1.0)), 0.6)
    ts = np.linspace(0.8, 1.2, 7)
    assert np.allclose(f(ts), f(-ts))
    d = f.derivatives(-1.1, 1)
    assert math.isclose(d[1], -f.derivatives(1.1, 1)[1])


def test_bump_support_must_fit():
    with pytest.raises(ValueError):
        BumpProfile(0.5, [(0.1, 0.3, 0.1)])


def test_spline_profile_reproduces_smooth_data():
    ts = np.linspace(0.2, 1.4, 60)
    f = SplineProfile(ts, np.cos(ts))
    assert np.allclose(f.derivatives(0.8, 2), [math.cos(0.8), -math.sin(0.8), -math.cos(0.8)], atol=1e-6)


def test_sexpr_round_trip_and_evaluation():
    tree = sexpr.parse("(* 0.5 (+ (pow x1 2) (sqrt (× x2 x2))))")
    assert sexpr.max_variable(tree) == 2
    assert math.isclose(sexpr.evaluate(tree, [2.0, -3.0]), 0.5 * (4 + 3))
    assert sexpr.parse(sexpr.to_text(tree)) == tree


@pytest.mark.parametrize("bad", ["", "(+ x1", "(foo x1 x2)", "(+ x1 x2))"])
def test_sexpr_rejects_malformed_input(bad):
    with pytest.raises(SpecError):
        sexpr.parse(bad)
