"""JSON (de)serialisation of norm specs, profiles and sample files."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import SpecError
from .norms import Euclidean, ExpressionNorm, NormSpec, ProfileNorm, Randers
from .profiles import BumpProfile, ProfileFunction, TrigProfile


def _period(value) -> float:
    if value in (None, "2pi"):
        return 2 * math.pi
    if value == "pi":
        return math.pi
    raise SpecError(f"period must be \"pi\" or \"2pi\", got {value!r}")


def load_profile(data: dict) -> ProfileFunction:
    if not isinstance(data, dict):
        raise SpecError("profile must be a JSON object")
    period = _period(data.get("period"))
    if "bumps" in data:
        return BumpProfile(float(data.get("base", 0.5)), [tuple(b) for b in data["bumps"]], period)
    if "cos" not in data:
        raise SpecError("profile needs \"cos\" coefficients or \"bumps\"")
    return TrigProfile(data["cos"], data.get("sin", ()), period)


def _matrix(data: dict, *keys) -> np.ndarray:
    for key in keys:
        if key in data:
            return np.asarray(data[key], dtype=float)
    raise SpecError(f"missing field {keys[0]!r}")


def load_spec(data: dict) -> NormSpec:
    """Build a NormSpec from its JSON object; raises SpecError on malformed input."""
    if not isinstance(data, dict) or "kind" not in data:
        raise SpecError("norm spec must be an object with a \"kind\" field")
    kind = data["kind"]
    try:
        if kind == "euclidean":
            return Euclidean(_matrix(data, "A", "matrix"))
        if kind == "randers":
            return Randers(_matrix(data, "alpha", "A"), _matrix(data, "beta"))
        if kind == "profile":
            band = data.get("band")
            return ProfileNorm(int(data["k"]), int(data["n"]), load_profile(data["profile"]),
                               None if band is None else tuple(band), bool(data.get("strict", True)))
        if kind == "expression":
            return ExpressionNorm(data["E"], int(data["n"]), data.get("cone"))
        if kind == "glued":
            from .constructions import build_glued

            return build_glued([tuple(d) for d in data["deformations"]], int(data.get("k", 1)),
                               int(data.get("n", 3))).F2
    except SpecError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed {kind} spec: {exc}") from None
    raise SpecError(f"unknown norm kind {kind!r}")


def dump_spec(spec: NormSpec) -> dict:
    if isinstance(spec, Euclidean):
        return {"kind": "euclidean", "A": spec.A.tolist()}
    if isinstance(spec, Randers):
        return {"kind": "randers", "alpha": spec.alpha.tolist(), "beta": spec.beta.tolist()}
    if isinstance(spec, ProfileNorm):
        out = {"kind": "profile", "k": spec.k, "n": spec.n, "profile": spec.f.to_json()}
        if spec.band is not None:
            out["band"] = list(spec.band)
        if not spec.strict:
            out["strict"] = False
        return out
    if isinstance(spec, ExpressionNorm):
        out = {"kind": "expression", "n": spec.n, "E": spec.expr}
        if spec.cone is not None:
            out["cone"] = np.asarray(spec.cone).tolist()
        return out
    raise SpecError(f"cannot serialise a {type(spec).__name__}")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def read_spec(path) -> NormSpec:
    return load_spec(read_json(path))
