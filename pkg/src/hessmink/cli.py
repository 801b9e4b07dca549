"""``hessmink`` command-line interface.

Exit codes: 0 success, 1 an invariant or acceptance check failed, 2 bad input.
All sampling uses ``numpy.random.default_rng(seed)`` (PCG64).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, constructions, isometry, spherical, tensors
from .errors import HessminkError, LengthMismatch, SpecError
from .legendre import DualNorm, LegendreMap, verify_hessian_isometry
from .norms import ProfileNorm, sample_points
from .specio import load_profile, read_json, read_spec


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(report, out: str | None) -> None:
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def cmd_tensors(args) -> int:
    spec = read_spec(args.spec)
    if args.point is None:
        points = sample_points(spec, args.samples, np.random.default_rng(args.seed))
    else:
        points = [np.array(args.point)]
        if len(points[0]) != spec.n:
            raise SpecError(f"point has {len(points[0])} entries, spec needs {spec.n}")
    summaries = [tensors.tensor_summary(spec, y, spec.kind) for y in points]
    if args.out:
        Path(args.out).write_text(tensors.tensor_csv(tensors.curvature_tensor(spec, points[0]).R))
    print(json.dumps(summaries if len(summaries) > 1 else summaries[0], indent=2))
    ok = all(s["residuals"]["min_eigenvalue_g"] > 0
             and all(v < args.tol for k, v in s["residuals"].items() if k != "min_eigenvalue_g")
             for s in summaries)
    return 0 if ok else 1


def cmd_legendre_check(args) -> int:
    spec = read_spec(args.spec)
    pts = sample_points(spec, args.samples, np.random.default_rng(args.seed))
    rep = verify_hessian_isometry(LegendreMap(spec), spec, DualNorm(spec), pts)
    print(f"max residual: {rep.max_residual:.3e}")
    if args.out:
        Path(args.out).write_text(json.dumps(rep.to_json(), indent=2) + "\n")
    return 0 if rep.ok(args.tol) else 1


def cmd_profile_scan(args) -> int:
    spec = read_spec(args.spec)
    if not isinstance(spec, ProfileNorm):
        raise SpecError("profile-scan needs a profile norm spec")
    grid = spherical.theta_grid(args.samples)
    rows = spherical.grid_rows(spec.f, grid)
    if args.out:
        Path(args.out).write_text(spherical.grid_csv(rows))
    intervals = spherical.validity_intervals(spec.f)
    report = {"samples": len(rows), "validity_intervals": [list(iv) for iv in intervals],
              "max_abs_R": max(abs(r["R_thetaphiphitheta"]) for r in rows),
              "max_abs_genericity": max(abs(r["genericity"]) for r in rows)}
    print(json.dumps(report, indent=2))
    return 0


def cmd_classify(args) -> int:
    data = read_json(args.input)
    try:
        f = load_profile(data["profile"])
        k, n = int(data.get("k", 1)), int(data.get("n", 3))
        samples = isometry.ThetaSamples.from_json(data["samples"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed sample file: {exc}") from None
    lo, hi = args.band if args.band else (float(samples.t[0]) - 1e-12, float(samples.t[-1]) + 1e-12)
    report = isometry.classify_bands(f, samples, lo, hi, k, n)
    _emit(report, args.out)
    decided = report["bands"] and all(b["verdict"] not in ("indeterminate", "insufficient-samples")
                                      for b in report["bands"])
    return 0 if decided else 1


def cmd_glue(args) -> int:
    deformations = [(0.6, 0.3, 0.1), (1.9, 0.35, 0.1)]
    if args.spec:
        data = read_json(args.spec)
        if data.get("kind") != "glued":
            raise SpecError("glue expects a spec of kind \"glued\"")
        deformations = [tuple(d) for d in data["deformations"]]
    g = constructions.build_glued(deformations)
    pts = constructions.boundary_dense_samples(g, rng=np.random.default_rng(args.seed))
    res = verify_hessian_isometry(g.map, g.F1, g.F2, pts).max_residual
    U1 = g.supports[0]
    mid = 0.5 * (U1[0] + U1[1])
    y = constructions.meridian_point(mid, 1, 3, phase=0.3)
    diff = float(np.linalg.norm(g.map(y) - LegendreMap(g.F1)(y)))
    report = {"glued": g.to_json(), "max_residual": res, "boundary_jump": constructions.boundary_jump(g),
              "diff_from_legendre": diff}
    _emit(report, args.out)
    return 0 if res < args.tol and report["boundary_jump"] < 1e-8 else 1


def cmd_polar2d(args) -> int:
    A = constructions.polar_chart_2d(read_spec(args.spec))
    report = {"arclength": A.arclength, "refinement_delta": A.refinement_delta}
    status = 0
    if args.spec2:
        B = constructions.polar_chart_2d(read_spec(args.spec2))
        report["arclength2"] = B.arclength
        try:
            m = constructions.two_d_isometry(A.norm, B.norm, charts=(A, B))
            pts = sample_points(A.norm, args.samples, np.random.default_rng(args.seed))
            res = constructions.isometry_check_2d(m, pts)
            report.update({"isometric": True, "max_residual": res})
            status = 0 if res < 1e-6 else 1
        except LengthMismatch as exc:
            report.update({"isometric": False, "reason": str(exc)})
    _emit(report, args.out)
    return status


def cmd_acceptance(args) -> int:
    numbers = args.only or list(acceptance.CRITERIA)
    results = []
    for i in numbers:
        r = acceptance.run_criterion(int(i), args.seed)
        print(r.line(), flush=True)
        results.append(r)
    if args.out:
        Path(args.out).write_text(json.dumps([r.to_json() for r in results], indent=2) + "\n")
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hessmink", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, spec_required=True):
        s = sub.add_parser(name, help=help_text)
        s.set_defaults(fn=fn)
        s.add_argument("--spec", required=spec_required, help="norm-spec JSON file")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", help="write the report (or CSV) here")
        return s

    s = add("tensors", cmd_tensors, "dump g, C, R and their invariant residuals")
    s.add_argument("--point", type=_floats)
    s.add_argument("--samples", type=int, default=1)
    s.add_argument("--tol", type=float, default=1e-9)
    s = add("legendre-check", cmd_legendre_check, "Legendre-map isometry residuals")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--tol", type=float, default=1e-8)
    s = add("profile-scan", cmd_profile_scan, "spherical-coordinate grid report")
    s.add_argument("--samples", type=int, default=500)
    s = add("classify", cmd_classify, "classify a sampled orbit map", spec_required=False)
    s.add_argument("input", help="JSON with profile, k, n and samples {t, theta[, dtheta, rho]}")
    s.add_argument("--band", type=_floats)
    s = add("glue", cmd_glue, "build and verify the glued isometry", spec_required=False)
    s.add_argument("--tol", type=float, default=1e-7)
    s = add("polar2d", cmd_polar2d, "2-D arclength and chart-matching isometry")
    s.add_argument("--spec2")
    s.add_argument("--samples", type=int, default=10)
    s = add("acceptance", cmd_acceptance, "run the acceptance criteria", spec_required=False)
    s.add_argument("--only", type=lambda t: [int(v) for v in t.split(",")])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except HessminkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
