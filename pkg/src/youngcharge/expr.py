"""A tiny arithmetic grammar for field expressions on [0, 1]^d.

Allowed: numbers, coordinates (x, y, z or x1 .. x6), + - * /, powers (** or ^),
unary minus, parentheses and the functions abs, min, max.
"""
from __future__ import annotations

import ast
from typing import Callable

import numpy as np

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_FUNCS = {"abs": 1, "min": 2, "max": 2}


class ExpressionError(ValueError):
    pass


def _coordinate(name: str, d: int) -> int:
    named = {"x": 0, "y": 1, "z": 2}
    if name in named:
        idx = named[name]
    elif name.startswith("x") and name[1:].isdigit():
        idx = int(name[1:]) - 1
    else:
        raise ExpressionError(f"unknown name {name!r}")
    if not 0 <= idx < d:
        raise ExpressionError(f"coordinate {name!r} not available in dimension {d}")
    return idx


def _compile(node, d: int):
    if isinstance(node, ast.Expression):
        return _compile(node.body, d)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda xs: value
    if isinstance(node, ast.Name):
        idx = _coordinate(node.id, d)
        return lambda xs: xs[idx]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, d)
        if isinstance(node.op, ast.USub):
            return lambda xs: np.negative(inner(xs))
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, d), _compile(node.right, d)
        return lambda xs: op(left(xs), right(xs))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if node.keywords or len(node.args) != _FUNCS[node.func.id]:
            raise ExpressionError(f"{node.func.id} takes {_FUNCS[node.func.id]} argument(s)")
        args = [_compile(a, d) for a in node.args]
        if node.func.id == "abs":
            return lambda xs: np.abs(args[0](xs))
        fn = np.minimum if node.func.id == "min" else np.maximum
        return lambda xs: fn(args[0](xs), args[1](xs))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse_expression(text: str, d: int) -> Callable:
    """Compile an expression into a vectorised function of d coordinate arrays."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from exc
    body = _compile(tree, d)

    def fn(*xs):
        if len(xs) != d:
            raise ExpressionError(f"expected {d} coordinates")
        with np.errstate(all="ignore"):
            out = body(xs)
        return np.asarray(out, dtype=float)

    return fn
