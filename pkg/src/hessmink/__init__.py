"""Hessian geometry of Minkowski norms: tensors, Legendre duality and orbit-preserving isometries."""
from .errors import HessminkError
from .norms import Euclidean, ExpressionNorm, NormSpec, ProfileNorm, Randers
from .profiles import BumpProfile, SplineProfile, TrigProfile
from .specio import dump_spec, load_spec, read_spec
from .tensors import cartan_tensor, curvature_tensor, fundamental_tensor, sectional_curvature
from .legendre import DualNorm, dual_norm, legendre_map, verify_hessian_isometry

__all__ = [
    "HessminkError", "NormSpec", "Euclidean", "Randers", "ProfileNorm", "ExpressionNorm",
    "TrigProfile", "BumpProfile", "SplineProfile", "load_spec", "dump_spec", "read_spec",
    "fundamental_tensor", "cartan_tensor", "curvature_tensor", "sectional_curvature",
    "DualNorm", "dual_norm", "legendre_map", "verify_hessian_isometry",
]
