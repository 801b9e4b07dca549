"""The acceptance experiments, shared by the test-suite and the ``acceptance`` command.

Every criterion is a function ``(rng) -> CriterionResult``; all randomness
comes from the generator passed in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import constructions as cons
from . import isometry as iso
from . import spherical as sph
from .errors import DomainError, LengthMismatch
from .legendre import (ComposedMap, DualNorm, LegendreMap, LinearMap, nonlinearity_witness,
                       verify_hessian_isometry)
from .norms import (Euclidean, ExpressionNorm, NormSpec, ProfileNorm, Randers, check_strong_convexity,
                    sample_points)
from .profiles import BumpProfile, TrigProfile
from .tensors import curvature_tensor, fd_riemann_oracle, relative_error

QUARTIC_EXPR = ("(* 0.5 (+ (+ (+ (* x1 x1) (* x2 x2)) (* x3 x3)) "
                 "(* 0.1 (sqrt (+ (+ (pow x1 4) (pow x2 4)) (pow x3 4))))))")


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"{'PASS' if self.passed else 'FAIL'} [{self.number:2d}] {self.name}: {shown}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "name": self.name, "passed": self.passed, "metrics": self.metrics}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


# -- random objects --------------------------------------------------------------


def random_randers(rng: np.random.Generator, n: int) -> Randers:
    M = rng.standard_normal((n, n))
    alpha = M @ M.T + n * np.eye(n)
    beta = rng.standard_normal(n)
    norm = math.sqrt(float(beta @ np.linalg.solve(alpha, beta)))
    return Randers(alpha, beta * rng.uniform(0.1, 0.8) / norm)


def random_profile(rng: np.random.Generator) -> TrigProfile:
    """1 + a2 cos 2t + a4 cos 4t + a6 cos 6t with a4 != 0, strongly convex."""
    while True:
        a2 = rng.uniform(-0.3, 0.3)
        a4 = rng.choice([-1, 1]) * rng.uniform(0.01, 0.04)
        a6 = rng.uniform(-0.006, 0.006)
        f = TrigProfile([1.0, 0, a2, 0, a4, 0, a6], period=math.pi)
        if _positive_definite_everywhere(f):
            return f


def _positive_definite_everywhere(f, count: int = 400) -> bool:
    """Vectorised form of the spherical-metric definiteness test on a theta grid."""
    ts = np.linspace(0.01, math.pi - 0.01, count)
    d0, d1, d2 = f.derivatives(ts, 2)
    det2 = 2 * d0 * (2 * d0 + d2) - d1 * d1
    side = 2 * np.sin(ts) * d0 + np.cos(ts) * d1
    return bool(np.all(d0 > 0) and np.all(det2 > 0) and np.all(side > 0))


def random_profile_norm(rng, k: int, n: int) -> ProfileNorm:
    return ProfileNorm(k, n, random_profile(rng))


# -- criteria -----------------------------------------------------------------------


def criterion_1(rng) -> CriterionResult:
    worst = 0.0
    for i in range(20):
        n = int(rng.choice([3, 4, 5]))
        F = random_randers(rng, n)
        pts = sample_points(F, 100, rng)
        worst = max(worst, verify_hessian_isometry(LegendreMap(F), F, DualNorm(F), pts).max_residual)
    return CriterionResult(1, "Legendre map is a Hessian isometry (20 Randers, 100 points each)",
                           worst < 1e-6, {"max_residual": worst, "tol": 1e-6})


def _non_euclidean_specs(rng) -> list[NormSpec]:
    specs: list[NormSpec] = [random_randers(rng, int(rng.choice([3, 4]))) for _ in range(4)]
    specs += [random_profile_norm(rng, 1, 3), random_profile_norm(rng, 1, 4), random_profile_norm(rng, 2, 4)]
    specs += [ExpressionNorm(QUARTIC_EXPR, 3)]
    specs += [ExpressionNorm("(* 0.5 (pow (+ (pow x1 4) (+ (pow x2 4) (pow x3 4))) 0.5))", 3, check=True)]
    specs += [ExpressionNorm("(* 0.5 (+ (* x1 x1) (+ (* x2 x2) (+ (* x3 x3) (* 0.2 (/ (* x1 (* x2 x3)) "
                             "(sqrt (+ (* x1 x1) (+ (* x2 x2) (* x3 x3))))))))))", 3)]
    return specs


def _good_point(spec, rng):
    """Random point away from symmetry axes (profile charts degenerate there)."""
    while True:
        y = rng.standard_normal(spec.n)
        if not spec.in_cone(y):
            continue
        if isinstance(spec, ProfileNorm):
            u, w = np.linalg.norm(y[: spec.k]), np.linalg.norm(y[spec.k:])
            if min(abs(u), w) < 0.2 * np.linalg.norm(y):
                continue
        if np.min(np.abs(y)) < 0.05 * np.linalg.norm(y):
            continue  # keep sqrt-of-quartic expressions well inside their smooth region
        return y


def criterion_2(rng) -> CriterionResult:
    worst = 0.0
    for spec in _non_euclidean_specs(rng):
        for _ in range(10):
            y = _good_point(spec, rng)
            worst = max(worst, relative_error(curvature_tensor(spec, y).R, fd_riemann_oracle(spec, y).R))
    return CriterionResult(2, "Cartan-tensor curvature matches finite-difference Christoffel curvature",
                           worst < 1e-4, {"max_rel_error": worst, "tol": 1e-4})


def criterion_3(rng) -> CriterionResult:
    c1, c2 = 1.0, float(rng.uniform(-0.6, 0.6))
    f, Q = sph.euclidean_profile(c1, c2)
    grid = sph.theta_grid(500)
    worst_R = max(abs(sph.curvature_component(f, 1.0, th)) for th in grid)
    F = ProfileNorm(1, 3, f)
    worst_E = 0.0
    for _ in range(200):
        y = rng.standard_normal(3)
        ref = (c1 + c2) * y[0] ** 2 + (c1 - c2) * (y[1] ** 2 + y[2] ** 2)
        worst_E = max(worst_E, abs(F.E(y) - ref) / ref)
    ok = worst_R < 1e-10 and worst_E < 1e-12
    return CriterionResult(3, "Euclidean profile c1 + c2 cos 2t is flat and reconstructs E", ok,
                           {"max_abs_R": worst_R, "max_rel_E_error": worst_E})


def criterion_4(rng) -> CriterionResult:
    c1, c2, c3 = 1.0, 0.2, 0.1
    f, report = sph.rem0040_profile(c1, c2, c3)
    worst_R = 0.0
    for lo, hi in report.intervals:
        for th in np.linspace(lo, hi, 502)[1:-1]:
            if lo + 1e-3 < th < hi - 1e-3:
                worst_R = max(worst_R, abs(sph.curvature_component(f, 1.0, th)))
    gpp = [sph.spherical_metric(f, 1.0, th).g_phiphi for th in sph.theta_grid(500)]
    closed = [2 * math.sin(th) * ((c1 - c2) * math.sin(th) + c3 * math.cos(th)) for th in sph.theta_grid(500)]
    form_err = max(abs(a - b) for a, b in zip(gpp, closed))
    sign_change = min(gpp) < 0 < max(gpp)
    flat = worst_R < 1e-9
    return CriterionResult(4, "tilted profile c1 + c2 cos 2t + c3 sin 2t: flat on validity intervals and g_phiphi changes sign",
                           flat and sign_change and form_err < 1e-12,
                           {"max_abs_R": worst_R, "tol": 1e-9, "gphiphi_sign_change": sign_change,
                            "gphiphi_formula_error": form_err, "gphiphi_root": report.gphiphi_roots[0]})


def criterion_5(rng) -> CriterionResult:
    """Root and discriminant identities, and discriminant sign against genericity.

    G is measured in the units of the quadratic,
    gamma = |G| / (f |cos theta sin theta| sqrt(B^2 + |4AC|)), and
    delta = (B^2 - 4AC) / (B^2 + |4AC|).  Samples with gamma <= 1e-8 must give a
    double root (|delta| at rounding level, <= 1e-14) and samples with
    gamma >= 1e-6 must give delta > 1e-14.  delta scales like gamma^2, so samples
    inside the band 1e-8 < gamma < 1e-6 are only counted.
    """
    profiles = [random_profile(rng) for _ in range(20)]
    profiles += [sph.euclidean_profile(1.0, float(c))[0] for c in rng.uniform(-0.5, 0.5, 3)]
    worst_root, worst_disc, sign_errors, count, flat, in_band = 0.0, 0.0, 0, 0, 0, 0
    while count < 1000:
        f = profiles[int(rng.integers(len(profiles)))]
        t, th = rng.uniform(0.02, math.pi - 0.02), rng.uniform(0.02, math.pi - 0.02)
        try:
            b = iso.branch_quadratic(f, t, th)
        except DomainError:
            continue
        count += 1
        worst_root = max(worst_root, *b.residuals())
        scale = b.B**2 + abs(4 * b.A * b.C)
        worst_disc = max(worst_disc, abs(b.discriminant - b.discriminant_closed) / scale)
        gamma = abs(b.genericity) / (float(f(t)) * abs(math.cos(th) * math.sin(th)) * math.sqrt(scale))
        delta = b.discriminant / scale
        if gamma <= 1e-8:
            flat += 1
            sign_errors += abs(delta) > 1e-14
        elif gamma >= 1e-6:
            sign_errors += not delta > 1e-14
        else:
            in_band += 1
    ok = worst_root < 1e-10 and worst_disc < 1e-10 and sign_errors == 0
    return CriterionResult(5, "quadratic roots, discriminant and its sign vs genericity (1000 samples)", ok,
                           {"max_root_residual": worst_root, "max_disc_mismatch": worst_disc,
                            "sign_mismatches": sign_errors, "nongeneric_samples": flat, "in_band": in_band})


def _fd_derivative(fn, t, h=1e-3):
    return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12 * h)


def criterion_6(rng) -> CriterionResult:
    worst_lin, worst_leg = 0.0, 0.0
    for _ in range(10):
        a = float(rng.choice([-1, 1]) * rng.uniform(0.3, 2.0))
        b = float(rng.uniform(0.3, 2.0))
        f = random_profile(rng)
        tp = iso.find_t_prime(f)
        for t in np.linspace(0.02, math.pi - 0.02, 200):
            if abs(t - math.pi / 2) < 0.02 or abs(t - tp) < 0.02:
                continue
            th = float(iso.linear_theta(a, b, t))
            d = _fd_derivative(lambda s: float(iso.linear_theta(a, b, s)), t)
            worst_lin = max(worst_lin, abs(d - iso.linear_branch(t, th)) / abs(d))
            th = float(iso.legendre_theta(f, a, b, t))
            if abs(math.sin(2 * th)) < 0.04:
                continue
            d = _fd_derivative(lambda s: float(iso.legendre_theta(f, a, b, s)), t)
            worst_leg = max(worst_leg, abs(d - float(iso.legendre_branch(f, t, th))) / abs(d))
    ok = max(worst_lin, worst_leg) < 1e-8
    return CriterionResult(6, "closed-form theta maps satisfy their branch ODEs", ok,
                           {"linear_max_residual": worst_lin, "legendre_max_residual": worst_leg})


def _classification_case(rng, branch: str):
    k = int(rng.choice([1, 2]))
    n = int(rng.choice([3, 4, 5])) if k == 1 else int(rng.choice([4, 5]))
    F = random_profile_norm(rng, k, n)
    a = float(rng.uniform(0.4, 2.0)) * (float(rng.choice([-1, 1])) if k == 1 else 1.0)
    b = float(rng.uniform(0.4, 2.0))
    if branch == "linear":
        m, _ = iso.linear_example(a, b, k, n)
    else:
        m, _ = iso.legendre_example(F, a, b, k)
    lo, hi = max(iso.generic_bands(F.f, 0.08, math.pi / 2 - 0.08), key=lambda iv: iv[1] - iv[0])
    samples = iso.sample_map_on_meridian(m, k, n, np.linspace(lo, hi, 40))
    return F.f, samples, (a, b), k, n


def _glued_case():
    g = cons.build_glued([(0.5, 0.3, 0.1), (1.6, 0.45, 0.1)])
    ts = np.linspace(0.1, 2.2, 211)
    samples = iso.sample_map_on_meridian(g.map, 1, 3, ts)
    return g, samples, ts[1] - ts[0]


def criterion_7(rng) -> CriterionResult:
    correct, worst_param = 0, 0.0
    for branch in ("linear",) * 50 + ("legendre",) * 50:
        f, samples, (a, b), k, n = _classification_case(rng, branch)
        c = iso.classify(f, samples, k=k, n=n)
        if c.verdict == branch:
            correct += 1
            fa, fb = c.model.params
            worst_param = max(worst_param, abs(fa - a) / abs(a), abs(fb - b) / b)
    g, samples, step = _glued_case()
    c = iso.classify(g.F1.f, samples)
    U1, U2 = g.supports
    located = False
    if c.verdict == "glued" and len(c.boundaries) == 1:
        left, right = c.boundaries[0]
        between = [lab for t, lab in zip(c.t, c.labels) if left < t < right]
        located = (U1[0] < left <= U1[1] + step and U2[0] - step <= right < U2[1]
                   and all(lab in ("ambiguous", "excluded") for lab in between))
    ok = correct == 100 and worst_param < 1e-5 and located
    return CriterionResult(7, "branch classification of 100 synthetic maps and a glued map", ok,
                           {"correct": correct, "max_param_error": worst_param, "glued_verdict": c.verdict,
                            "glued_boundary": list(c.boundaries[0]) if c.boundaries else None,
                            "euclidean_gap": [U1[1], U2[0]]})


def criterion_8(rng) -> CriterionResult:
    worst_fit, ok = 0.0, True
    cases = []
    for _ in range(5):
        c2 = float(rng.uniform(-0.5, 0.5))
        f, _ = sph.euclidean_profile(1.0, c2)
        cases.append((f, (0.1, 1.45)))
    bump = BumpProfile(0.5, [(2.0, 0.5, 0.05)])
    cases.append((bump, (0.1, 1.4)))
    for f, band in cases:
        a, b = float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0))
        m, _ = iso.linear_example(a, b, 1, 3)
        samples = iso.sample_map_on_meridian(m, 1, 3, np.linspace(band[0], band[1], 30))
        fit = iso.fit_euclidean_profile(f, band)[2]
        worst_fit = max(worst_fit, fit)
        model = iso.classify_flat(f, samples, band)
        ok &= abs(model.params[0] - a) < 1e-8 * abs(a) and abs(model.params[1] - b) < 1e-8 * b
    ok &= worst_fit < 1e-8
    return CriterionResult(8, "non-generic bands: Euclidean fit and linear model", ok,
                           {"max_fit_residual": worst_fit, "cases": len(cases)})


def _two_d_norms(rng) -> list[NormSpec]:
    return [random_randers(rng, 2), random_randers(rng, 2),
            ExpressionNorm("(* 0.5 (+ (+ (* x1 x1) (* x2 x2)) (* 0.1 (sqrt (+ (pow x1 4) (pow x2 4))))))", 2),
            Euclidean(np.array([[2.0, 0.4], [0.4, 0.8]]))]


def criterion_9(rng) -> CriterionResult:
    worst_R = 0.0
    norms = _two_d_norms(rng)
    for spec in norms:
        for y in sample_points(spec, 10, rng):
            j = spec.jet3(y)
            C = 0.5 * j.third
            scale = np.abs(C).max() ** 2 * np.abs(np.linalg.inv(j.hess)).max() + 1e-300
            if np.abs(C).max() == 0.0:
                scale = np.abs(j.hess).max()
            worst_R = max(worst_R, float(np.abs(curvature_tensor(spec, y).R).max() / scale))
    base = norms[0]
    chart = cons.polar_chart_2d(base)
    worst_L = 0.0
    pairs_ok = True
    for i in range(20):
        M = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        while abs(np.linalg.det(M)) < 0.2:
            M = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        moved = iso.LinearPushforward(base, np.linalg.inv(M))  # E(M y)
        c2 = cons.polar_chart_2d(moved)
        worst_L = max(worst_L, abs(c2.arclength - chart.arclength))
        if i < 3:
            m = cons.two_d_isometry(base, moved, charts=(chart, c2))
            pts = sample_points(base, 8, rng)
            pairs_ok &= cons.isometry_check_2d(m, pts) < 1e-6
    others = [cons.polar_chart_2d(s) for s in norms[1:]]
    for other in others:
        agree = abs(other.arclength - chart.arclength) < 1e-8
        try:
            cons.two_d_isometry(base, other.norm, charts=(chart, other))
            pairs_ok &= agree
        except LengthMismatch:
            pairs_ok &= not agree
    ok = worst_R < 1e-9 and worst_L < 1e-8 and pairs_ok
    return CriterionResult(9, "2-D: flat Hessian metrics, arclength invariant, isometry iff equal length", ok,
                           {"max_rel_R": worst_R, "max_length_change": worst_L, "isometry_checks": pairs_ok,
                            "lengths": [chart.arclength] + [o.arclength for o in others]})


def criterion_10(rng) -> CriterionResult:
    spec = ExpressionNorm(QUARTIC_EXPR, 3)
    pts = [_good_point(spec, rng) for _ in range(50)]
    sym = max(abs(spec.E(-y) - spec.E(y)) / spec.E(y) for y in pts)
    convex = check_strong_convexity(spec, pts).ok
    best = 0.0
    for y in pts:
        R = curvature_tensor(spec, y).R
        best = max(best, float(np.abs(R).max() / np.abs(spec.hess(y)).max()))
    ok = best > 1e-6 and convex and sym < 1e-14
    return CriterionResult(10, "absolutely homogeneous non-Euclidean norm has non-zero curvature", ok,
                           {"max_rel_R": best, "abs_homogeneity_error": sym, "strongly_convex": convex})


def criterion_11(rng) -> CriterionResult:
    g = cons.build_glued([(0.6, 0.3, 0.1), (1.9, 0.35, 0.1)])
    pts = cons.boundary_dense_samples(g, rng=rng)
    res = verify_hessian_isometry(g.map, g.F1, g.F2, pts).max_residual
    U1, U2 = g.supports
    mid2 = 0.5 * (U2[0] + U2[1])
    pairs = [(cons.meridian_point(mid2 - 0.05, 1, 3, phase=0.2), cons.meridian_point(mid2 + 0.05, 1, 3, phase=0.5))]
    wit = 0.0
    for y1, y2 in pairs:
        a, b, c = g.map(y1), g.map(y2), g.map(y1 + y2)
        wit = max(wit, float(np.linalg.norm(c - a - b) / (np.linalg.norm(a) + np.linalg.norm(b))))
    legendre = LegendreMap(g.F1)
    diff = 0.0
    for t in np.linspace(U1[0], U1[1], 9)[1:-1]:
        y = cons.meridian_point(float(t), 1, 3, phase=0.3)
        diff = max(diff, float(np.linalg.norm(g.map(y) - legendre(y)) / np.linalg.norm(y)))
    jump = cons.boundary_jump(g)
    ok = res < 1e-7 and wit > 1e-6 and diff > 1e-4 and jump < 1e-8
    return CriterionResult(11, "glued map is a nonlinear, non-Legendre Hessian isometry", ok,
                           {"max_residual": res, "nonlinearity": wit, "diff_from_legendre": diff,
                            "boundary_jump": jump, "amplitude_scale": g.scale})


CRITERIA: dict[int, Callable] = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_criterion(number: int, seed: int = 0) -> CriterionResult:
    return CRITERIA[number](np.random.default_rng([seed, number]))


def run_all(seed: int = 0) -> list[CriterionResult]:
    return [run_criterion(i, seed) for i in CRITERIA]
