"""A small arithmetic expression language for label functions in configs.

Grammar: numbers, names, ``+ - * / ^`` (``**`` also accepted), unary minus,
parentheses and calls to ``exp sin cos sinh cosh tanh sqrt``.  Expressions
are parsed with :mod:`ast` and checked against this whitelist; nothing is
passed to ``eval``.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

FUNCTIONS = {
    "exp": np.exp, "sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
    "sqrt": np.sqrt,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide, ast.Pow: np.power,
}


class ExpressionError(ValueError):
    """Malformed or disallowed expression."""


@dataclass(frozen=True)
class Expression:
    source: str
    tree: ast.Expression
    names: frozenset[str]

    def __call__(self, **values) -> np.ndarray:
        missing = self.names - set(values) - set(CONSTANTS)
        if missing:
            raise ExpressionError(f"expression {self.source!r} needs values for {sorted(missing)}")
        with np.errstate(all="ignore"):
            out = np.asarray(_eval(self.tree.body, values))
        # complex inputs pass through so callers can differentiate by complex step
        return out if np.iscomplexobj(out) else out.astype(float)

    def bind(self, constants: Mapping[str, float]) -> "Expression":
        """Substitute named constants now; the remaining names stay free."""
        consts = {k: float(v) for k, v in constants.items()}
        tree = _Subst(consts).visit(ast.parse(self.tree_source, mode="eval"))
        ast.fix_missing_locations(tree)
        return Expression(self.source, tree, frozenset(self.names - set(consts)))

    @property
    def tree_source(self) -> str:
        return ast.unparse(self.tree)


class _Subst(ast.NodeTransformer):
    def __init__(self, consts):
        self.consts = consts

    def visit_Name(self, node):
        if node.id in self.consts:
            return ast.copy_location(ast.Constant(self.consts[node.id]), node)
        return node


def _eval(node, env):
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        if node.id in env:
            return env[node.id]
        return CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        x = _eval(node.operand, env)
        return -x if isinstance(node.op, ast.USub) else x
    if isinstance(node, ast.Call):
        return FUNCTIONS[node.func.id](_eval(node.args[0], env))
    raise ExpressionError(f"unexpected node {type(node).__name__}")  # parse() rules this out


def _validate(node, src: str, names: set[str]):
    if isinstance(node, ast.Expression):
        _validate(node.body, src, names)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric literals are allowed in {src!r}")
    elif isinstance(node, ast.Name):
        if node.id in FUNCTIONS:
            raise ExpressionError(f"function {node.id!r} used without a call in {src!r}")
        if node.id not in CONSTANTS:
            names.add(node.id)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} is not allowed in {src!r}")
        _validate(node.left, src, names)
        _validate(node.right, src, names)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError(f"unary operator {type(node.op).__name__} is not allowed in {src!r}")
        _validate(node.operand, src, names)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function in {src!r}; allowed: {sorted(FUNCTIONS)}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument in {src!r}")
        _validate(node.args[0], src, names)
    else:
        raise ExpressionError(f"{type(node).__name__} is not allowed in {src!r}")


def parse(source: str | float | int) -> Expression:
    """Parse and validate an expression (numbers are accepted as constants)."""
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        source = repr(float(source))
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError(f"expression must be a non-empty string, got {source!r}")
    try:
        tree = ast.parse(source.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    names: set[str] = set()
    _validate(tree, source, names)
    return Expression(source, tree, frozenset(names))
