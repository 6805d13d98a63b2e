#!/usr/bin/env python3
"""
Small arithmetic expressions for weight parameters and sequence overrides,
e.g. "1/2", "3^-n" or "log(1+1/n) - 3^-n". Parsed with ast against a whitelist.
"""

import ast
import math
from typing import Callable, Dict, Optional

import numpy as np

from weightlab.models import ParseError


_BINARY = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_UNARY = {ast.UAdd: np.positive, ast.USub: np.negative}
_FUNCTIONS = {
    'exp': np.exp,
    'log': np.log,
    'log1p': np.log1p,
    'expm1': np.expm1,
    'sqrt': np.sqrt,
}
_CONSTANTS = {'e': math.e, 'pi': math.pi}


def _parse(text: str, variables: tuple) -> ast.expr:
    if not text or not text.strip():
        raise ParseError("Empty expression")
    try:
        tree = ast.parse(text.strip().replace('^', '**'), mode='eval')
    except SyntaxError as e:
        raise ParseError(f"Cannot parse expression '{text}'", details={'error': str(e)})
    for node in ast.walk(tree.body):
        if isinstance(node, ast.Name):
            if node.id not in variables and node.id not in _CONSTANTS and node.id not in _FUNCTIONS:
                raise ParseError(f"Unknown name '{node.id}' in '{text}'",
                                 details={'allowed': sorted(set(variables) | set(_CONSTANTS) | set(_FUNCTIONS))})
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS or len(node.args) != 1 \
                    or node.keywords:
                raise ParseError(f"Unsupported call in '{text}'")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINARY:
                raise ParseError(f"Unsupported operator in '{text}'")
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ParseError(f"Unsupported operator in '{text}'")
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ParseError(f"Unsupported literal in '{text}'")
        elif not isinstance(node, (ast.Load, ast.operator, ast.unaryop)):
            raise ParseError(f"Unsupported syntax in '{text}'", details={'node': type(node).__name__})
    return tree.body


def _evaluate(node: ast.expr, env: Dict[str, np.ndarray]):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in env:
            return env[node.id]
        return _CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINARY[type(node.op)](_evaluate(node.left, env), _evaluate(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_evaluate(node.operand, env))
    if isinstance(node, ast.Call):
        return _FUNCTIONS[node.func.id](_evaluate(node.args[0], env))
    raise ParseError(f"Unsupported syntax: {type(node).__name__}")


def compile_sequence(text: str, variable: str = 'n') -> Callable[[np.ndarray], np.ndarray]:
    """Compile an expression in n into a vectorised sequence generator"""
    tree = _parse(text, (variable,))

    def sequence(n: np.ndarray) -> np.ndarray:
        with np.errstate(over='ignore', under='ignore', divide='ignore', invalid='ignore'):
            value = _evaluate(tree, {variable: np.asarray(n, dtype=float)})
        return np.broadcast_to(np.asarray(value, dtype=float), np.shape(n))

    sequence.__doc__ = text
    return sequence


def parse_number(text: str, name: Optional[str] = None) -> float:
    """Evaluate a constant expression such as '1/2' or 'e'"""
    value = float(_evaluate(_parse(text, ()), {}))
    if not math.isfinite(value):
        raise ParseError(f"{name or 'Value'} '{text}' is not finite")
    return value
