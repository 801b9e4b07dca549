import math

import numpy as np
import pytest

from hessmink import tensors
from hessmink.errors import DegeneratePlane
from hessmink.norms import Euclidean, ExpressionNorm, Randers, sample_points
from test_norms import QUARTIC, PROFILE, RANDERS


def test_euclidean_is_flat():
    spec = Euclidean(np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 1.5]]))
    R = tensors.curvature_tensor(spec, [0.3, -1.0, 0.7]).R
    assert not np.any(R)


@pytest.mark.parametrize("spec", [RANDERS, PROFILE], ids=["randers", "profile"])
def test_closed_form_curvature_matches_finite_difference_connection(spec, rng):
    for y in sample_points(spec, 3, rng):
        R = tensors.curvature_tensor(spec, y)
        oracle = tensors.fd_riemann_oracle(spec, y)
        assert tensors.relative_error(R.R, oracle.R) < 1e-4


def test_curvature_symmetries(rng):
    y = sample_points(RANDERS, 1, rng)[0]
    R = tensors.curvature_tensor(RANDERS, y)
    res = R.symmetry_residuals()
    assert max(res.values()) < 1e-12 * max(R.scale(), 1.0)
    assert np.abs(np.einsum("ijkl,l->ijk", R.R, y)).max() < 1e-12 * R.scale() * np.linalg.norm(y) + 1e-15


def test_two_dimensional_hessian_metrics_are_flat(rng):
    for y in sample_points(QUARTIC, 5, rng):
        R = tensors.curvature_tensor(QUARTIC, y).R
        assert np.abs(R).max() < 1e-12


def test_euclidean_indicatrix_is_unit_sphere():
    spec = Euclidean(np.eye(3))
    k = tensors.indicatrix_sectional_curvature(spec, [1.0, 0.0, 0.0], [0.0, 1.0, 0.3], [0.2, 0.0, 1.0])
    assert math.isclose(k, 1.0, abs_tol=1e-14)


def test_cone_decomposition_and_radial_geodesics(rng):
    for y in sample_points(RANDERS, 5, rng):
        assert tensors.cone_decomposition_residual(RANDERS, y) < 1e-12
        assert tensors.radial_geodesic_residual(RANDERS, y) < 1e-6


def test_sectional_curvature_rejects_parallel_vectors():
    with pytest.raises(DegeneratePlane):
        tensors.sectional_curvature(RANDERS, [1.0, 0.5, 0.2], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0])


def test_summary_and_csv_are_serialisable():
    s = tensors.tensor_summary(RANDERS, [1.0, 0.5, 0.2], "randers")
    assert s["residuals"]["min_eigenvalue_g"] > 0
    text = tensors.tensor_csv(tensors.curvature_tensor(RANDERS, [1.0, 0.5, 0.2]).R)
    assert len(text.strip().splitlines()) == 1 + 81
