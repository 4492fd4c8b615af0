"""Expression tree for macroscopic rate laws.

Nodes are immutable. ``evaluate`` computes a value; ``forward`` computes the
value together with its gradient with respect to every species (forward-mode
automatic differentiation with a vector tangent).
"""

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from lnamor.lib.errors import EvalError
from lnamor.lib.types import Vector


@dataclass(frozen=True)
class Constant:
    """A decimal literal."""

    value: float


@dataclass(frozen=True)
class SpeciesRef:
    """Concentration of species ``index`` (named ``name`` in the model file)."""

    index: int
    name: str


@dataclass(frozen=True)
class ParameterRef:
    """A named kinetic parameter bound in the model file."""

    name: str


@dataclass(frozen=True)
class Negate:
    operand: "Expression"


@dataclass(frozen=True)
class BinaryOp:
    """Arithmetic node; ``op`` is one of + - * / ^."""

    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Sqrt:
    operand: "Expression"


type Expression = Constant | SpeciesRef | ParameterRef | Negate | BinaryOp | Sqrt


def species_in(expr: Expression) -> set[int]:
    """Indices of the species an expression depends on."""
    match expr:
        case SpeciesRef(index=index):
            return {index}
        case Negate(operand=operand) | Sqrt(operand=operand):
            return species_in(operand)
        case BinaryOp(left=left, right=right):
            return species_in(left) | species_in(right)
        case _:
            return set()


def parameters_in(expr: Expression) -> set[str]:
    """Names of the parameters an expression references."""
    match expr:
        case ParameterRef(name=name):
            return {name}
        case Negate(operand=operand) | Sqrt(operand=operand):
            return parameters_in(operand)
        case BinaryOp(left=left, right=right):
            return parameters_in(left) | parameters_in(right)
        case _:
            return set()


def evaluate(expr: Expression, x: Vector, parameters: Mapping[str, float]) -> float:
    """Evaluate an expression at species vector x.

    Raises:
        EvalError: On division by zero, sqrt of a negative number, an
            undefined power or a non-finite result
    """
    value = _value(expr, x, parameters)
    if not math.isfinite(value):
        raise EvalError(f"expression evaluated to {value}")
    return value


def _value(expr: Expression, x: Vector, parameters: Mapping[str, float]) -> float:
    match expr:
        case Constant(value=value):
            return value
        case SpeciesRef(index=index):
            return float(x[index])
        case ParameterRef(name=name):
            return parameters[name]
        case Negate(operand=operand):
            return -_value(operand, x, parameters)
        case Sqrt(operand=operand):
            u = _value(operand, x, parameters)
            if u < 0:
                raise EvalError(f"sqrt of negative value {u}")
            return math.sqrt(u)
        case BinaryOp(op=op, left=left, right=right):
            u = _value(left, x, parameters)
            v = _value(right, x, parameters)
            return _apply(op, u, v)
    raise TypeError(f"unknown expression node {expr!r}")


def _apply(op: str, u: float, v: float) -> float:
    match op:
        case "+":
            return u + v
        case "-":
            return u - v
        case "*":
            return u * v
        case "/":
            if v == 0:
                raise EvalError("division by zero")
            return u / v
        case "^":
            return _power(u, v)
    raise TypeError(f"unknown operator {op!r}")


def _power(u: float, v: float) -> float:
    if u < 0 and not float(v).is_integer():
        raise EvalError(f"negative base {u} with non-integer exponent {v}")
    if u == 0 and v < 0:
        raise EvalError("zero raised to a negative power")
    try:
        return u**v
    except OverflowError as e:
        raise EvalError(f"overflow in {u}^{v}") from e


def forward(
    expr: Expression, x: Vector, parameters: Mapping[str, float]
) -> tuple[float, Vector]:
    """Value and gradient of an expression with respect to the species.

    Returns:
        Tuple of (value, gradient) where gradient has one entry per species

    Raises:
        EvalError: As ``evaluate``, or when the derivative is unbounded
    """
    value, grad = _forward(expr, np.asarray(x, dtype=float), parameters)
    if not math.isfinite(value) or not np.all(np.isfinite(grad)):
        raise EvalError(f"non-finite value or derivative at x={x}")
    return value, grad


def _forward(
    expr: Expression, x: Vector, parameters: Mapping[str, float]
) -> tuple[float, Vector]:
    n = x.shape[0]
    match expr:
        case Constant(value=value):
            return value, np.zeros(n)
        case SpeciesRef(index=index):
            grad = np.zeros(n)
            grad[index] = 1.0
            return float(x[index]), grad
        case ParameterRef(name=name):
            return parameters[name], np.zeros(n)
        case Negate(operand=operand):
            u, du = _forward(operand, x, parameters)
            return -u, -du
        case Sqrt(operand=operand):
            u, du = _forward(operand, x, parameters)
            if u < 0:
                raise EvalError(f"sqrt of negative value {u}")
            root = math.sqrt(u)
            if root == 0:
                if np.any(du):
                    raise EvalError("derivative of sqrt at zero is unbounded")
                return 0.0, np.zeros(n)
            return root, du / (2 * root)
        case BinaryOp(op=op, left=left, right=right):
            u, du = _forward(left, x, parameters)
            v, dv = _forward(right, x, parameters)
            return _forward_binary(op, u, du, v, dv)
    raise TypeError(f"unknown expression node {expr!r}")


def _forward_binary(
    op: str, u: float, du: Vector, v: float, dv: Vector
) -> tuple[float, Vector]:
    match op:
        case "+":
            return u + v, du + dv
        case "-":
            return u - v, du - dv
        case "*":
            return u * v, du * v + u * dv
        case "/":
            if v == 0:
                raise EvalError("division by zero")
            return u / v, (du * v - u * dv) / (v * v)
        case "^":
            value = _power(u, v)
            if not np.any(dv):
                # constant exponent: d(u^v) = v u^(v-1) du
                if v == 0 or not np.any(du):
                    return value, np.zeros_like(du)
                return value, v * _power(u, v - 1) * du
            if u <= 0:
                raise EvalError(f"variable exponent needs a positive base, got {u}")
            return value, value * (dv * math.log(u) + v * du / u)
    raise TypeError(f"unknown operator {op!r}")
