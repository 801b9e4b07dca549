"""Prefix s-expression grammar for Expression norm specs.

Grammar::

    expr := number | x<i> | "(" op expr+ ")"
    op   := + | - | * | / | pow | sqrt      (also the glyphs − × ÷)

``pow`` takes a numeric literal exponent.  Variables are 1-based.
"""
from __future__ import annotations

import math
import re
from typing import Any, Callable

from .errors import NonSmoothPoint, SpecError

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_ALIASES = {"−": "-", "×": "*", "÷": "/", "^": "pow"}
_OPS = {"+", "-", "*", "/", "pow", "sqrt"}

Node = tuple


def parse(text: str) -> Node:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise SpecError("empty expression")
    node, pos = _parse(tokens, 0)
    if pos != len(tokens):
        raise SpecError(f"trailing tokens after expression: {tokens[pos:]}")
    return node


def _parse(tokens: list[str], pos: int) -> tuple[Node, int]:
    tok = tokens[pos]
    if tok == "(":
        if pos + 1 >= len(tokens):
            raise SpecError("unterminated expression")
        op = _ALIASES.get(tokens[pos + 1], tokens[pos + 1])
        if op not in _OPS:
            raise SpecError(f"unknown operator {tokens[pos + 1]!r}")
        pos += 2
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            arg, pos = _parse(tokens, pos)
            args.append(arg)
        if pos >= len(tokens):
            raise SpecError("missing ')'")
        _check_arity(op, args)
        return (op, *args), pos + 1
    if tok == ")":
        raise SpecError("unexpected ')'")
    if re.fullmatch(r"x\d+", tok):
        idx = int(tok[1:])
        if idx < 1:
            raise SpecError("variables are 1-based")
        return ("var", idx - 1), pos + 1
    try:
        return ("num", float(tok)), pos + 1
    except ValueError:
        raise SpecError(f"bad token {tok!r}") from None


def _check_arity(op: str, args: list) -> None:
    if op in ("+", "*") and len(args) < 1:
        raise SpecError(f"{op} needs at least one argument")
    if op == "-" and len(args) not in (1, 2):
        raise SpecError("- takes one or two arguments")
    if op == "/" and len(args) != 2:
        raise SpecError("/ takes two arguments")
    if op == "sqrt" and len(args) != 1:
        raise SpecError("sqrt takes one argument")
    if op == "pow":
        if len(args) != 2 or args[1][0] != "num":
            raise SpecError("pow takes a base and a numeric exponent")


def max_variable(node: Node) -> int:
    """Largest 1-based variable index used."""
    if node[0] == "var":
        return node[1] + 1
    if node[0] == "num":
        return 0
    return max(max_variable(a) for a in node[1:])


def _float_sqrt(x: float) -> float:
    if x < 0.0:
        raise NonSmoothPoint(f"sqrt of negative value {x}")
    return math.sqrt(x)


def evaluate(node: Node, xs: list[Any], sqrt: Callable[[Any], Any] = _float_sqrt) -> Any:
    """Evaluate over floats or jets; ``xs`` holds one entry per variable."""
    op = node[0]
    if op == "num":
        return node[1]
    if op == "var":
        return xs[node[1]]
    args = [evaluate(a, xs, sqrt) for a in node[1:]] if op != "pow" else None
    if op == "+":
        out = args[0]
        for a in args[1:]:
            out = out + a
        return out
    if op == "*":
        out = args[0]
        for a in args[1:]:
            out = out * a
        return out
    if op == "-":
        return -args[0] if len(args) == 1 else args[0] - args[1]
    if op == "/":
        return args[0] / args[1]
    if op == "sqrt":
        return sqrt(args[0])
    if op == "pow":
        base = evaluate(node[1], xs, sqrt)
        p = node[2][1]
        if not isinstance(base, float) and not isinstance(base, int):
            return base**p
        if base < 0 and p != int(p):
            raise NonSmoothPoint(f"non-integer power of negative value {base}")
        return float(base) ** p
    raise SpecError(f"unknown node {op!r}")


def to_text(node: Node) -> str:
    op = node[0]
    if op == "num":
        return repr(node[1])
    if op == "var":
        return f"x{node[1] + 1}"
    return "(" + " ".join([op] + [to_text(a) for a in node[1:]]) + ")"
