"""
Lector de expresiones en notación infija

Descripción:
    Convierte textos como "sin(x + eps)", "1/eps + 3" o
    "where(x < 0, eps + 1, 1)" en árboles de fn_ast, usando el módulo ast
    de Python para el análisis sintáctico. Las subexpresiones constantes se
    pliegan en una sola Const hiperreal, así "1/eps + 3" es la constante
    ε⁻¹ + 3.

    Nombres: x, t o n (la variable), eps (ε), pi. Funciones: sin, cos, exp,
    bump, plateau(a, arg), recip, parity, where(cond, then, else),
    mollify(base, escala, amplitud[, centro]), testbump(c, h[, arg]) y los
    constructores de la galería: dirac(), step(a, b), indicator(),
    fast_sine(), scaled_bump(), shifted_sine().
"""

import ast
import logging
import math
from fractions import Fraction
from typing import Any, Callable, Optional

from hyperdist import gallery
from hyperdist.errors import HyperDistError, ParseError
from hyperdist.fn_ast import (Bump, Const, Cos, Exp, Expr, Mollify, Parity, Piecewise, Plateau, Recip, Sin,
                              TestRef, Var, lift)
from hyperdist.hyperreal import HyperReal
from hyperdist.testfn import Bump as TestBump

logger = logging.getLogger(__name__)

VARIABLES: frozenset[str] = frozenset({"x", "t", "n"})

_COMPARE_OPS: dict[type, str] = {ast.Lt: "<", ast.LtE: "<=", ast.Gt: ">", ast.GtE: ">="}

_UNARY_FUNCS: dict[str, Callable[[Expr], Expr]] = {
    "sin": Sin,
    "cos": Cos,
    "exp": Exp,
    "bump": Bump,
    "recip": Recip,
    "parity": Parity,
}

_GALLERY: dict[str, Callable[..., Expr]] = {
    "dirac": gallery.dirac,
    "step": gallery.small_step,
    "indicator": gallery.compressed_indicator,
    "fast_sine": gallery.fast_sine,
    "scaled_bump": gallery.scaled_bump,
    "shifted_sine": gallery.shifted_sine,
}


def _constant(node: Expr) -> Optional[HyperReal]:
    return node.value if isinstance(node, Const) else None


def _to_fraction(value: HyperReal) -> Fraction:
    if not value.is_standard():
        raise ParseError(f"El exponente debe ser un real estándar: {value}")
    return Fraction(value.coefficient(0)).limit_denominator(10 ** 6)


def _power(base: Expr, exponent: Expr) -> Expr:
    exp_value = _constant(exponent)
    if exp_value is None:
        raise ParseError("El exponente de ** debe ser constante")
    q = _to_fraction(exp_value)
    base_value = _constant(base)
    if base_value is not None:
        if q.denominator == 1:
            return Const(base_value ** int(q))
        # potencias racionales solo para monomios c·ε^e con c = 1
        if len(base_value.terms) == 1 and base_value.leading_coefficient == 1.0:
            return Const(HyperReal.epsilon(base_value.leading_exponent * q))
        raise ParseError(f"Potencia racional de {base_value} no soportada")
    if q.denominator != 1:
        raise ParseError("Solo se admiten potencias enteras de expresiones no constantes")
    return base ** int(q)


class _Builder(ast.NodeVisitor):
    def __init__(self, bindings: dict[str, Expr]) -> None:
        self.bindings = bindings

    def generic_visit(self, node: ast.AST) -> Any:
        raise ParseError(f"Construcción no soportada: {type(node).__name__}")

    def visit_Expression(self, node: ast.Expression) -> Expr:
        return self.visit(node.body)

    def visit_Constant(self, node: ast.Constant) -> Expr:
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ParseError(f"Constante no numérica: {node.value!r}")
        return Const(HyperReal.from_real(node.value))

    def visit_Name(self, node: ast.Name) -> Expr:
        if node.id in VARIABLES:
            return Var()
        if node.id == "eps":
            return Const(HyperReal.epsilon())
        if node.id == "pi":
            return Const(HyperReal.from_real(math.pi))
        if node.id in self.bindings:
            return self.bindings[node.id]
        raise ParseError(f"Nombre desconocido: {node.id}")

    def visit_UnaryOp(self, node: ast.UnaryOp) -> Expr:
        operand = self.visit(node.operand)
        if isinstance(node.op, ast.UAdd):
            return operand
        if isinstance(node.op, ast.USub):
            value = _constant(operand)
            return Const(-value) if value is not None else -operand
        raise ParseError(f"Operador unario no soportado: {type(node.op).__name__}")

    def visit_BinOp(self, node: ast.BinOp) -> Expr:
        left, right = self.visit(node.left), self.visit(node.right)
        if isinstance(node.op, ast.Pow):
            return _power(left, right)
        lv, rv = _constant(left), _constant(right)
        folding = lv is not None and rv is not None
        if isinstance(node.op, ast.Add):
            return Const(lv + rv) if folding else left + right
        if isinstance(node.op, ast.Sub):
            return Const(lv - rv) if folding else left - right
        if isinstance(node.op, ast.Mult):
            return Const(lv * rv) if folding else left * right
        if isinstance(node.op, ast.Div):
            return Const(lv / rv) if folding else left / right
        raise ParseError(f"Operador no soportado: {type(node.op).__name__}")

    def visit_Compare(self, node: ast.Compare) -> tuple[Expr, str, Expr]:
        if len(node.ops) != 1 or type(node.ops[0]) not in _COMPARE_OPS:
            raise ParseError("La condición debe ser una única comparación <, <=, > o >=")
        return self.visit(node.left), _COMPARE_OPS[type(node.ops[0])], self.visit(node.comparators[0])

    def visit_Call(self, node: ast.Call) -> Expr:
        if not isinstance(node.func, ast.Name) or node.keywords:
            raise ParseError("Llamada no soportada")
        name = node.func.id
        if name == "where":
            if len(node.args) != 3 or not isinstance(node.args[0], ast.Compare):
                raise ParseError("where(cond, then, else) necesita una comparación y dos ramas")
            lhs, op, rhs = self.visit_Compare(node.args[0])
            return Piecewise(lhs, op, rhs, self.visit(node.args[1]), self.visit(node.args[2]))
        args = [self.visit(a) for a in node.args]
        if name in _UNARY_FUNCS:
            if len(args) != 1:
                raise ParseError(f"{name} necesita un argumento")
            return _UNARY_FUNCS[name](args[0])
        if name == "plateau":
            return Plateau(self._real(args[0]), *(args[1:2] or [Var()]))
        if name == "mollify":
            if len(args) not in (3, 4):
                raise ParseError("mollify(base, escala, amplitud[, centro])")
            values = [self._hyper(a) for a in args[1:]]
            return Mollify(args[0], *values)
        if name == "testbump":
            if len(args) not in (2, 3):
                raise ParseError("testbump(c, h[, arg])")
            return TestRef(TestBump(self._real(args[0]), self._real(args[1])), *(args[2:3] or [Var()]))
        if name in _GALLERY:
            params = [self._hyper(a) for a in args]
            return _GALLERY[name](*params)
        raise ParseError(f"Función desconocida: {name}")

    @staticmethod
    def _hyper(node: Expr) -> HyperReal:
        value = _constant(node)
        if value is None:
            raise ParseError(f"Se esperaba una constante: {node}")
        return value

    def _real(self, node: Expr) -> float:
        value = self._hyper(node)
        if not value.is_standard():
            raise ParseError(f"Se esperaba un real estándar: {value}")
        return value.coefficient(0)


def parse_expr(text: str, bindings: Optional[dict[str, Expr]] = None) -> Expr:
    """
    Lee una función interna escrita en notación infija.

    Args:
        text: Expresión, por ejemplo "sin(x + eps)"
        bindings: Nombres adicionales (etiquetas de sesión)

    Returns:
        Expr: Árbol equivalente

    Raises:
        ParseError: Si el texto no es una expresión válida
    """
    logger.debug(f"Analizando expresión: {text!r}")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise ParseError(f"Sintaxis inválida en {text!r}: {e.msg}") from e
    try:
        return lift(_Builder(bindings or {}).visit(tree))
    except ParseError:
        raise
    except (HyperDistError, ValueError, TypeError) as e:
        raise ParseError(f"Expresión inválida {text!r}: {e}") from e


def parse_constant(text: str) -> HyperReal:
    """
    Lee una constante hiperreal, por ejemplo "eps", "1/eps + 3" o "2".

    Raises:
        ParseError: Si la expresión depende de la variable
    """
    expr = parse_expr(text)
    if not isinstance(expr, Const):
        raise ParseError(f"{text!r} no es una constante")
    return expr.value
