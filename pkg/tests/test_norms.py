import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hessmink.errors import OutOfCone, SpecError, ZeroPoint
from hessmink.norms import (Euclidean, ExpressionNorm, ProfileNorm, Randers, check_strong_convexity,
                            euler_residuals, homogeneity_error, sample_points)
from hessmink.profiles import TrigProfile

RANDERS = Randers(np.diag([1.0, 2.0, 1.5]), np.array([0.2, -0.3, 0.1]))
PROFILE = ProfileNorm(1, 3, TrigProfile([1.0, 0.0, 0.15, 0.0, 0.03], period=math.pi))
QUARTIC = ExpressionNorm("(* 0.5 (+ (+ (* x1 x1) (* x2 x2)) (* 0.1 (sqrt (+ (pow x1 4) (pow x2 4))))))", 2)
NORMS = [Euclidean(np.diag([1.0, 3.0])), RANDERS, PROFILE, QUARTIC]

vectors3 = arrays(float, 3, elements=st.floats(-3, 3)).filter(lambda v: np.linalg.norm(v[1:]) > 0.05)


@pytest.mark.parametrize("spec", NORMS, ids=lambda s: s.kind)
def test_euler_identities_hold_at_random_points(spec, rng):
    for y in sample_points(spec, 20, rng):
        assert max(euler_residuals(spec.jet3(y), y)) < 1e-10


@given(vectors3, st.floats(0.05, 20.0))
def test_profile_and_randers_are_two_homogeneous(y, lam):
    for spec in (PROFILE, RANDERS):
        assert math.isclose(spec.E(lam * y), lam**2 * spec.E(y), rel_tol=1e-11)
    assert homogeneity_error(RANDERS, [y], [lam]) < 1e-11


@given(vectors3)
def test_randers_jet_matches_closed_form(y):
    F = math.sqrt(y @ RANDERS.alpha @ y) + RANDERS.beta @ y
    assert math.isclose(RANDERS.F(y), F, rel_tol=1e-13)
    assert math.isclose(RANDERS.jet3(y).value, 0.5 * F * F, rel_tol=1e-13)


def test_hessians_are_positive_definite(rng):
    for spec in NORMS:
        assert check_strong_convexity(spec, sample_points(spec, 30, rng)).ok


def test_zero_point_is_rejected():
    with pytest.raises(ZeroPoint):
        RANDERS.E(np.zeros(3))


def test_cone_is_enforced():
    spec = ExpressionNorm("(* 0.5 (+ (* x1 x1) (* x2 x2)))", 2, cone=[[1.0, 0.0]])
    with pytest.raises(OutOfCone):
        spec.E([-1.0, 0.5])
    empty = ExpressionNorm("(* 0.5 (+ (* x1 x1) (* x2 x2)))", 2, cone=[[1.0, 0.0], [-1.0, 0.0]], check=False)
    with pytest.raises(OutOfCone):
        sample_points(empty, 1, np.random.default_rng(0), max_tries=50)


@pytest.mark.parametrize("build", [
    lambda: Euclidean(np.array([[1.0, 2.0], [0.0, 1.0]])),
    lambda: Euclidean(np.diag([1.0, -1.0])),
    lambda: Randers(np.eye(2), np.array([1.0, 0.0])),
    lambda: ExpressionNorm("(* x1 x1 x2)", 2),
    lambda: ExpressionNorm("(* x3 x3)", 2),
    lambda: ProfileNorm(2, 3, TrigProfile([1.0])),
    lambda: ProfileNorm(1, 3, TrigProfile([1.0, 0.0, 0.1], [0.0, 0.0, 0.1])),
])
def test_invalid_specs_raise_spec_error(build):
    with pytest.raises(SpecError):
        build()
