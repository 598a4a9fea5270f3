"""Safe evaluation of closed-form radial profiles such as ``"sin(r)^2"``.

Expressions are parsed with :mod:`ast` and only a small whitelist of node
types is accepted, so configuration files can never execute arbitrary code.
"""
from __future__ import annotations

import ast
import operator
from typing import Callable

import numpy as np

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
_CONSTANTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class ExpressionError(ValueError):
    pass


def _compile(node: ast.AST, var: str) -> Callable:
    if isinstance(node, ast.Expression):
        return _compile(node.body, var)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        value = float(node.value)
        return lambda x: value
    if isinstance(node, ast.Name):
        if node.id == var:
            return lambda x: x
        if node.id in _CONSTANTS:
            value = _CONSTANTS[node.id]
            return lambda x: value
        raise ExpressionError(f"unknown identifier {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, var), _compile(node.right, var)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op = _UNARY[type(node.op)]
        arg = _compile(node.operand, var)
        return lambda x: op(arg(x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        if node.func.id not in _FUNCS or len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"unsupported call {ast.unparse(node)!r}")
        fn = _FUNCS[node.func.id]
        arg = _compile(node.args[0], var)
        return lambda x: fn(arg(x))
    raise ExpressionError(f"unsupported syntax {ast.unparse(node)!r}")


def parse_expression(text: str, var: str = "r") -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` into a vectorized function of ``var``.

    ``^`` is accepted as a synonym for ``**``.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    fn = _compile(tree, var)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(fn(x), x.shape).astype(float)

    evaluate.source = text
    return evaluate
