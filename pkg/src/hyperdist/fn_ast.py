"""
Árboles de expresiones para funciones internas *R → *R

Descripción:
    Una función interna es un árbol inmutable sobre una variable real con
    constantes hiperreales. Se evalúa en puntos hiperreales escribiendo
    t = s + δ con s = st(t) y componiendo la serie de Taylor de cada
    primitiva en s con δ (modo Taylor). Las primitivas no analíticas (bump,
    meseta, funciones test) usan su desarrollo de Taylor en s, que es el
    desarrollo asintótico correcto hasta el orden de truncamiento.

    Nodos: Var, Const, Add, Mul, Neg, IntPow, Recip, Sin, Cos, Exp, Bump,
    Plateau, Piecewise, Mollify, TestRef, Parity.

    Los árboles se construyen con operadores de Python (f + g, 2 * f,
    f ** 3, f / g) o directamente con los nodos.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Iterator, Optional, Union

import numpy as np

from hyperdist.errors import NotShadowable, ParseError, UnsupportedEvaluation
from hyperdist.hyperreal import HyperReal, NumClass, Ordering
from hyperdist.taylor import bump_integral, bump_jets, bump_values, plateau_jets, plateau_values
from hyperdist.testfn import TestFn, deriv_as_testfn, testfn_from_json

logger = logging.getLogger(__name__)

Flags = Optional[list[str]]
Number = Union[int, float]

COMPARISONS: dict[str, Callable[[Ordering], bool]] = {
    "<": lambda o: o is Ordering.LT,
    "<=": lambda o: o is not Ordering.GT,
    ">": lambda o: o is Ordering.GT,
    ">=": lambda o: o is not Ordering.LT,
}

_REAL_COMPARISONS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


# ==================== UTILIDADES DE TAYLOR ====================

def _split(v: HyperReal) -> tuple[float, HyperReal]:
    s = v.coefficient(0)
    delta = v - s
    if not delta.is_zero() and delta.leading_exponent <= 0:
        raise UnsupportedEvaluation(f"Argumento no limitado: {v}")
    return s, delta


def _compose_at(v: HyperReal, coeffs_at: Callable[[float, int], list[float]]) -> HyperReal:
    # f(s + δ) = Σ c_k δ^k con c_k = f^(k)(s)/k!
    s, delta = _split(v)
    if delta.is_zero():
        return HyperReal.from_real(coeffs_at(s, 0)[0], v.policy)
    return delta.compose(coeffs_at(s, delta.taylor_order()))


def _sin_coeffs(s: float, order: int) -> list[float]:
    cycle = (math.sin(s), math.cos(s), -math.sin(s), -math.cos(s))
    return [cycle[k % 4] / math.factorial(k) for k in range(order + 1)]


def _cos_coeffs(s: float, order: int) -> list[float]:
    cycle = (math.cos(s), -math.sin(s), -math.cos(s), math.sin(s))
    return [cycle[k % 4] / math.factorial(k) for k in range(order + 1)]


def _exp_coeffs(s: float, order: int) -> list[float]:
    e = math.exp(s)
    return [e / math.factorial(k) for k in range(order + 1)]


def _reject_infinite(v: HyperReal, name: str) -> None:
    if v.classify() is NumClass.INFINITE:
        logger.error(f"{name} evaluada en un argumento infinito: {v}")
        raise UnsupportedEvaluation(f"{name} no admite argumentos infinitos ({v})", primitive=name)


def _format_hyper(h: HyperReal) -> str:
    if h.is_standard():
        return repr(h.coefficient(0))
    parts = [f"{c!r}*eps**({e})" for e, c in h.terms]
    return "(" + " + ".join(parts) + ")"


# ==================== NODOS ====================

class Expr:
    """
    Nodo base de los árboles de funciones internas.
    """

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        raise NotImplementedError

    def real(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError

    def children(self) -> Iterator["Expr"]:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Expr):
                yield value

    def __add__(self, other: Any) -> "Expr":
        return Add(self, lift(other))

    def __radd__(self, other: Any) -> "Expr":
        return Add(lift(other), self)

    def __sub__(self, other: Any) -> "Expr":
        return Add(self, Neg(lift(other)))

    def __rsub__(self, other: Any) -> "Expr":
        return Add(lift(other), Neg(self))

    def __mul__(self, other: Any) -> "Expr":
        return Mul(self, lift(other))

    def __rmul__(self, other: Any) -> "Expr":
        return Mul(lift(other), self)

    def __neg__(self) -> "Expr":
        return Neg(self)

    def __truediv__(self, other: Any) -> "Expr":
        other = lift(other)
        if isinstance(other, Const):
            return Mul(self, Const(other.value.recip()))
        return Mul(self, Recip(other))

    def __pow__(self, n: int) -> "Expr":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return Recip(IntPow(self, -n))
        return IntPow(self, n)


def lift(value: Any) -> Expr:
    """Convierte números y hiperreales en Const; deja los Expr tal cual."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, HyperReal):
        return Const(value)
    if isinstance(value, (int, float)):
        return Const(HyperReal.from_real(value))
    raise TypeError(f"No se puede convertir {type(value).__name__} en una expresión")


@dataclass(frozen=True)
class Var(Expr):
    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return t

    def real(self, xs: np.ndarray) -> np.ndarray:
        return xs

    def to_json(self) -> dict[str, Any]:
        return {"op": "var", "args": []}

    def __str__(self) -> str:
        return "x"


@dataclass(frozen=True)
class Const(Expr):
    value: HyperReal

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", HyperReal.coerce(self.value))

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return self.value

    def real(self, xs: np.ndarray) -> np.ndarray:
        if not self.value.is_standard():
            raise UnsupportedEvaluation(f"Constante no estándar {self.value} en evaluación real")
        return np.full_like(xs, self.value.coefficient(0), dtype=float)

    def to_json(self) -> dict[str, Any]:
        return {"op": "const", "args": [], "value": self.value.to_json()}

    def __str__(self) -> str:
        return _format_hyper(self.value)


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return self.left.evaluate(t, flags) + self.right.evaluate(t, flags)

    def real(self, xs: np.ndarray) -> np.ndarray:
        return self.left.real(xs) + self.right.real(xs)

    def to_json(self) -> dict[str, Any]:
        return {"op": "add", "args": [self.left.to_json(), self.right.to_json()]}

    def __str__(self) -> str:
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return self.left.evaluate(t, flags) * self.right.evaluate(t, flags)

    def real(self, xs: np.ndarray) -> np.ndarray:
        return self.left.real(xs) * self.right.real(xs)

    def to_json(self) -> dict[str, Any]:
        return {"op": "mul", "args": [self.left.to_json(), self.right.to_json()]}

    def __str__(self) -> str:
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return -self.arg.evaluate(t, flags)

    def real(self, xs: np.ndarray) -> np.ndarray:
        return -self.arg.real(xs)

    def to_json(self) -> dict[str, Any]:
        return {"op": "neg", "args": [self.arg.to_json()]}

    def __str__(self) -> str:
        return f"(-{self.arg})"


@dataclass(frozen=True)
class IntPow(Expr):
    base: Expr
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"IntPow requiere un exponente natural: {self.n}")

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return self.base.evaluate(t, flags) ** self.n

    def real(self, xs: np.ndarray) -> np.ndarray:
        return self.base.real(xs) ** self.n

    def to_json(self) -> dict[str, Any]:
        return {"op": "pow", "args": [self.base.to_json()], "n": self.n}

    def __str__(self) -> str:
        return f"({self.base} ** {self.n})"


@dataclass(frozen=True)
class Recip(Expr):
    arg: Expr

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return self.arg.evaluate(t, flags).recip()

    def real(self, xs: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 1.0 / self.arg.real(xs)

    def to_json(self) -> dict[str, Any]:
        return {"op": "recip", "args": [self.arg.to_json()]}

    def __str__(self) -> str:
        return f"recip({self.arg})"


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr = field(default_factory=Var)

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        v = self.arg.evaluate(t, flags)
        _reject_infinite(v, "sin")
        return _compose_at(v, _sin_coeffs)

    def real(self, xs: np.ndarray) -> np.ndarray:
        return np.sin(self.arg.real(xs))

    def to_json(self) -> dict[str, Any]:
        return {"op": "sin", "args": [self.arg.to_json()]}

    def __str__(self) -> str:
        return f"sin({self.arg})"


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr = field(default_factory=Var)

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        v = self.arg.evaluate(t, flags)
        _reject_infinite(v, "cos")
        return _compose_at(v, _cos_coeffs)

    def real(self, xs: np.ndarray) -> np.ndarray:
        return np.cos(self.arg.real(xs))

    def to_json(self) -> dict[str, Any]:
        return {"op": "cos", "args": [self.arg.to_json()]}

    def __str__(self) -> str:
        return f"cos({self.arg})"


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr = field(default_factory=Var)

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        v = self.arg.evaluate(t, flags)
        _reject_infinite(v, "exp")
        return _compose_at(v, _exp_coeffs)

    def real(self, xs: np.ndarray) -> np.ndarray:
        return np.exp(self.arg.real(xs))

    def to_json(self) -> dict[str, Any]:
        return {"op": "exp", "args": [self.arg.to_json()]}

    def __str__(self) -> str:
        return f"exp({self.arg})"


@dataclass(frozen=True)
class Bump(Expr):
    """b(t) = exp(−1/(1−t²)) en |t| < 1, 0 fuera."""

    arg: Expr = field(default_factory=Var)

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        v = self.arg.evaluate(t, flags)
        if v.classify() is NumClass.INFINITE or abs(v) >= 1:
            return HyperReal.zero(v.policy)
        s, delta = _split(v)
        if abs(s) >= 1.0:
            # plana en ±1: todo el desarrollo queda por debajo de ε^max_order
            return HyperReal.zero(v.policy)
        if delta.is_zero():
            return HyperReal.from_real(float(bump_values(np.array([s]))[0]), v.policy)
        coeffs = bump_jets(np.array([s]), delta.taylor_order())[:, 0]
        return delta.compose([float(c) for c in coeffs])

    def real(self, xs: np.ndarray) -> np.ndarray:
        return bump_values(self.arg.real(xs))

    def to_json(self) -> dict[str, Any]:
        return {"op": "bump", "args": [self.arg.to_json()]}

    def __str__(self) -> str:
        return f"bump({self.arg})"


@dataclass(frozen=True)
class Plateau(Expr):
    """Meseta suave: 1 en [−a/2, a/2], 0 fuera de [−a, a]."""

    a: float
    arg: Expr = field(default_factory=Var)

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise ValueError(f"El radio de la meseta debe ser positivo: {self.a}")

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        v = self.arg.evaluate(t, flags)
        if v.classify() is NumClass.INFINITE or abs(v) >= self.a:
            return HyperReal.zero(v.policy)
        if abs(v) <= self.a / 2:
            return HyperReal.from_real(1.0, v.policy)
        s, delta = _split(v)
        coeffs = plateau_jets(np.array([s]), self.a / 2, self.a, 0 if delta.is_zero() else delta.taylor_order())[:, 0]
        if delta.is_zero():
            return HyperReal.from_real(float(coeffs[0]), v.policy)
        return delta.compose([float(c) for c in coeffs])

    def real(self, xs: np.ndarray) -> np.ndarray:
        return plateau_values(self.arg.real(xs), self.a / 2, self.a)

    def to_json(self) -> dict[str, Any]:
        return {"op": "plateau", "args": [self.arg.to_json()], "a": self.a}

    def __str__(self) -> str:
        return f"plateau({self.a!r}, {self.arg})"


@dataclass(frozen=True)
class Piecewise(Expr):
    """then si lhs op rhs, else_ en otro caso (comparación hiperreal exacta)."""

    lhs: Expr
    op: str
    rhs: Expr
    then: Expr
    else_: Expr

    def __post_init__(self) -> None:
        if self.op not in COMPARISONS:
            raise ValueError(f"Comparación no soportada: {self.op}")

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        left = self.lhs.evaluate(t, flags)
        right = self.rhs.evaluate(t, flags)
        ordering = left.compare(right)
        if ordering is Ordering.EQ:
            message = f"DegenerateBranch: {self.lhs} {self.op} {self.rhs} en x = {t}"
            logger.warning(message)
            if flags is not None:
                flags.append(message)
        branch = self.then if COMPARISONS[self.op](ordering) else self.else_
        return branch.evaluate(t, flags)

    def real(self, xs: np.ndarray) -> np.ndarray:
        mask = _REAL_COMPARISONS[self.op](self.lhs.real(xs), self.rhs.real(xs))
        return np.where(mask, self.then.real(xs), self.else_.real(xs))

    def to_json(self) -> dict[str, Any]:
        return {"op": "piecewise", "cmp": self.op,
                "args": [self.lhs.to_json(), self.rhs.to_json(), self.then.to_json(), self.else_.to_json()]}

    def __str__(self) -> str:
        return f"where({self.lhs} {self.op} {self.rhs}, {self.then}, {self.else_})"


@dataclass(frozen=True)
class Mollify(Expr):
    """
    x ↦ amplitude · base((x − center)/scale).

    La base es un árbol en su propia variable; scale es un hiperreal
    positivo, infinitesimal o apreciable.
    """

    base: Expr
    scale: HyperReal
    amplitude: HyperReal
    center: HyperReal = field(default_factory=HyperReal.zero)

    def __post_init__(self) -> None:
        for name in ("scale", "amplitude", "center"):
            object.__setattr__(self, name, HyperReal.coerce(getattr(self, name)))
        if self.scale.classify() not in (NumClass.NONZERO_INFINITESIMAL, NumClass.APPRECIABLE) or self.scale <= 0:
            raise ValueError(f"La escala del molificador debe ser positiva y limitada: {self.scale}")

    @property
    def is_singular(self) -> bool:
        return self.scale.classify() is NumClass.NONZERO_INFINITESIMAL

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        u = (t - self.center) * self.scale.recip()
        return self.amplitude * self.base.evaluate(u, flags)

    def real(self, xs: np.ndarray) -> np.ndarray:
        if not (self.scale.is_standard() and self.amplitude.is_standard() and self.center.is_standard()):
            raise UnsupportedEvaluation("Molificador no estándar en evaluación real")
        u = (xs - self.center.coefficient(0)) / self.scale.coefficient(0)
        return self.amplitude.coefficient(0) * self.base.real(u)

    def to_json(self) -> dict[str, Any]:
        return {"op": "mollify", "args": [self.base.to_json()], "scale": self.scale.to_json(),
                "amplitude": self.amplitude.to_json(), "center": self.center.to_json()}

    def __str__(self) -> str:
        return (f"mollify({self.base}, {_format_hyper(self.scale)}, {_format_hyper(self.amplitude)}, "
                f"{_format_hyper(self.center)})")


@dataclass(frozen=True)
class TestRef(Expr):
    """La extensión *g de una función test, compuesta con arg."""

    __test__ = False

    g: TestFn
    arg: Expr = field(default_factory=Var)

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        return self.g.at(self.arg.evaluate(t, flags))

    def real(self, xs: np.ndarray) -> np.ndarray:
        return self.g.values(self.arg.real(xs))

    def to_json(self) -> dict[str, Any]:
        return {"op": "testref", "args": [self.arg.to_json()], "g": self.g.to_json()}

    def __str__(self) -> str:
        return f"testref({self.g}, {self.arg})"


@dataclass(frozen=True)
class Parity(Expr):
    """n mod 2 en enteros estándar."""

    arg: Expr = field(default_factory=Var)

    def evaluate(self, t: HyperReal, flags: Flags) -> HyperReal:
        v = self.arg.evaluate(t, flags)
        s = v.coefficient(0)
        if not v.is_standard() or s != math.floor(s):
            logger.error(f"Paridad de un argumento no entero estándar: {v}")
            raise UnsupportedEvaluation(f"La paridad de {v} no está definida", primitive="parity")
        return HyperReal.from_real(float(int(s) % 2), v.policy)

    def real(self, xs: np.ndarray) -> np.ndarray:
        values = self.arg.real(xs)
        if np.any(values != np.floor(values)):
            raise UnsupportedEvaluation("Paridad de un argumento no entero")
        return np.mod(values, 2.0)

    def to_json(self) -> dict[str, Any]:
        return {"op": "parity", "args": [self.arg.to_json()]}

    def __str__(self) -> str:
        return f"parity({self.arg})"


# ==================== EVALUACIÓN ====================

def eval_at(f: Expr, t: Union[HyperReal, Number], flags: Flags = None) -> HyperReal:
    """
    Evalúa la función interna f en un punto hiperreal.

    Args:
        f: Árbol de la función
        t: Punto (real o hiperreal)
        flags: Lista opcional donde se anotan las ramas degeneradas

    Returns:
        HyperReal: f(t) con semántica de series truncadas

    Raises:
        UnsupportedEvaluation: Primitiva analítica en un argumento infinito
        DivisionByZero: Recíproco de cero
    """
    return f.evaluate(HyperReal.coerce(t), flags)


def evaluate_real(f: Expr, xs: np.ndarray) -> np.ndarray:
    """
    Evaluación vectorizada de un árbol estándar en puntos reales.

    Raises:
        UnsupportedEvaluation: Si el árbol tiene constantes no estándar
    """
    return np.asarray(f.real(np.asarray(xs, dtype=float)), dtype=float)


# ==================== RECORRIDOS ====================

def walk(f: Expr, enter_mollify: bool = True) -> Iterator[Expr]:
    """Recorrido en preorden del árbol."""
    yield f
    if isinstance(f, Mollify) and not enter_mollify:
        return
    for child in f.children():
        yield from walk(f=child, enter_mollify=enter_mollify)


def map_tree(f: Expr, fn: Callable[[Expr], Expr], enter_mollify: bool = True) -> Expr:
    """Reconstruye el árbol de abajo arriba aplicando fn a cada nodo."""
    if not (isinstance(f, Mollify) and not enter_mollify):
        updates = {fd.name: map_tree(getattr(f, fd.name), fn, enter_mollify)
                   for fd in fields(f) if isinstance(getattr(f, fd.name), Expr)}
        if updates:
            f = replace(f, **updates)
    return fn(f)


def constants(f: Expr) -> Iterator[HyperReal]:
    """Todas las constantes hiperreales del árbol, incluidas las de Mollify."""
    for node in walk(f):
        if isinstance(node, Const):
            yield node.value
        elif isinstance(node, Mollify):
            yield node.scale
            yield node.amplitude
            yield node.center


def is_standard(f: Expr) -> bool:
    """True si todas las constantes son reales estándar."""
    return all(c.is_standard() for c in constants(f))


def has_infinite_constant(f: Expr) -> bool:
    return any(c.classify() is NumClass.INFINITE for c in constants(f))


def piecewise_breakpoints(f: Expr) -> list[HyperReal]:
    """
    Puntos de corte c de las condiciones de la forma x ⋈ c o c ⋈ x.

    No entra en las bases de Mollify (tienen su propia variable).
    """
    points: list[HyperReal] = []
    for node in walk(f, enter_mollify=False):
        if isinstance(node, Piecewise):
            c = breakpoint_of(node)
            if c is not None:
                points.append(c)
    return points


def breakpoint_of(node: Piecewise) -> Optional[HyperReal]:
    if isinstance(node.lhs, Var) and isinstance(node.rhs, Const):
        return node.rhs.value
    if isinstance(node.lhs, Const) and isinstance(node.rhs, Var):
        return node.lhs.value
    return None


def expr_support(f: Expr) -> Optional[tuple[float, float]]:
    """
    Intervalo real acotado fuera del cual f se anula, si se deduce de la estructura.

    Returns:
        (lo, hi) o None si no se puede acotar
    """
    if isinstance(f, Bump) and isinstance(f.arg, Var):
        return (-1.0, 1.0)
    if isinstance(f, Plateau) and isinstance(f.arg, Var):
        return (-f.a, f.a)
    if isinstance(f, TestRef) and isinstance(f.arg, Var):
        s = f.g.support()
        return (s.lo, s.hi)
    if isinstance(f, Const) and f.value.is_zero():
        return (0.0, 0.0)
    if isinstance(f, Neg):
        return expr_support(f.arg)
    if isinstance(f, IntPow) and f.n > 0:
        return expr_support(f.base)
    if isinstance(f, Mul):
        left, right = expr_support(f.left), expr_support(f.right)
        if left is None or right is None:
            return left or right
        lo, hi = max(left[0], right[0]), min(left[1], right[1])
        return (lo, hi) if lo <= hi else (0.0, 0.0)
    if isinstance(f, (Add, Piecewise)):
        parts = [expr_support(f.left), expr_support(f.right)] if isinstance(f, Add) else \
            [expr_support(f.then), expr_support(f.else_)]
        if any(p is None for p in parts):
            return None
        return (min(p[0] for p in parts), max(p[1] for p in parts))
    if isinstance(f, Mollify) and not f.is_singular and f.center.is_limited():
        base = expr_support(f.base)
        if base is None:
            return None
        c, s = f.center.coefficient(0), f.scale.coefficient(0)
        return (c + s * base[0], c + s * base[1])
    return None


# ==================== TRANSFORMACIONES ====================

def _simplify(node: Expr) -> Expr:
    if isinstance(node, Add):
        if isinstance(node.left, Const) and node.left.value.is_zero():
            return node.right
        if isinstance(node.right, Const) and node.right.value.is_zero():
            return node.left
        if isinstance(node.left, Const) and isinstance(node.right, Const):
            return Const(node.left.value + node.right.value)
    if isinstance(node, Mul):
        for a, b in ((node.left, node.right), (node.right, node.left)):
            if isinstance(a, Const) and a.value.is_zero():
                return Const(HyperReal.zero())
            if isinstance(a, Const) and a.value == 1:
                return b
        if isinstance(node.left, Const) and isinstance(node.right, Const):
            return Const(node.left.value * node.right.value)
    if isinstance(node, Neg) and isinstance(node.arg, Const):
        return Const(-node.arg.value)
    if isinstance(node, Piecewise) and node.then == node.else_:
        return node.then
    return node


def _shadow_node(node: Expr) -> Expr:
    if isinstance(node, Const):
        if node.value.classify() is NumClass.INFINITE:
            raise NotShadowable(f"Constante infinita {node.value}", constant=node.value.to_json())
        return Const(HyperReal.from_real(node.value.coefficient(0)))
    if isinstance(node, Mollify):
        if node.is_singular:
            raise NotShadowable("Molificador de escala infinitesimal", scale=node.scale.to_json())
        if not (node.amplitude.is_limited() and node.center.is_limited()):
            raise NotShadowable("Molificador con amplitud o centro infinitos")
        return Mollify(node.base, HyperReal.from_real(node.scale.coefficient(0)),
                       HyperReal.from_real(node.amplitude.coefficient(0)),
                       HyperReal.from_real(node.center.coefficient(0)))
    return _simplify(node)


def shadow_ast(f: Expr) -> Expr:
    """
    Árbol estándar F con F(p) = st f(p) en los reales p sin ramas degeneradas.

    Sustituye cada constante por su parte estándar.

    Raises:
        NotShadowable: Constantes infinitas, molificadores de escala
            infinitesimal o condiciones de Piecewise con constantes no
            estándar (el punto de corte se movería al tomar st)
    """
    for node in walk(f):
        if isinstance(node, Piecewise) and not (is_standard(node.lhs) and is_standard(node.rhs)):
            logger.error(f"Condición no estándar en {node.lhs} {node.op} {node.rhs}")
            raise NotShadowable(f"Condición con constantes no estándar: {node.lhs} {node.op} {node.rhs}")
    shadow = map_tree(f, _shadow_node)
    logger.debug(f"Sombra de {f}: {shadow}")
    return shadow


def substitute(f: Expr, inner: Expr) -> Expr:
    """
    Composición f ∘ inner (sustituye la variable por inner).

    Raises:
        UnsupportedEvaluation: Si f contiene un Mollify (su variable es implícita)
    """
    if any(isinstance(node, Mollify) for node in walk(f)):
        raise UnsupportedEvaluation("No se puede componer un árbol con Mollify")
    return map_tree(f, lambda node: inner if isinstance(node, Var) else node)


def _d(f: Expr) -> Expr:
    if isinstance(f, Var):
        return Const(HyperReal.from_real(1.0))
    if isinstance(f, Const):
        return Const(HyperReal.zero())
    if isinstance(f, Add):
        return _simplify(Add(_d(f.left), _d(f.right)))
    if isinstance(f, Neg):
        return _simplify(Neg(_d(f.arg)))
    if isinstance(f, Mul):
        return _simplify(Add(_simplify(Mul(_d(f.left), f.right)), _simplify(Mul(f.left, _d(f.right)))))
    if isinstance(f, IntPow):
        if f.n == 0:
            return Const(HyperReal.zero())
        power = f.base if f.n == 2 else IntPow(f.base, f.n - 1)
        return _simplify(Mul(Const(HyperReal.from_real(f.n)), _simplify(Mul(power, _d(f.base)))))
    if isinstance(f, Recip):
        return _simplify(Neg(_simplify(Mul(_d(f.arg), IntPow(f, 2)))))
    if isinstance(f, Sin):
        return _simplify(Mul(Cos(f.arg), _d(f.arg)))
    if isinstance(f, Cos):
        return _simplify(Neg(_simplify(Mul(Sin(f.arg), _d(f.arg)))))
    if isinstance(f, Exp):
        return _simplify(Mul(f, _d(f.arg)))
    if isinstance(f, TestRef):
        return _simplify(Mul(TestRef(deriv_as_testfn(f.g, 1), f.arg), _d(f.arg)))
    raise UnsupportedEvaluation(f"Sin derivada simbólica para el nodo {type(f).__name__}")


def derivative_tree(f: Expr) -> Expr:
    """
    Derivada simbólica para la gramática suave (Var, Const, Add, Mul, Neg,
    IntPow, Recip, Sin, Cos, Exp, TestRef).

    Raises:
        UnsupportedEvaluation: Para Bump, Plateau, Piecewise, Mollify o Parity
    """
    return _d(f)


# ==================== DIRAC ====================

def make_dirac() -> Mollify:
    """
    Molificador de Dirac: d(x) = b(x/ε)/(ε·I_b), con I_b = ∫₋₁¹ b.

    Returns:
        Mollify: soporte [−ε, ε] y masa total 1
    """
    eps = HyperReal.epsilon()
    amplitude = eps.scale(bump_integral()).recip()
    return Mollify(Bump(), eps, amplitude)


# ==================== JSON ====================

_UNARY: dict[str, type] = {"neg": Neg, "recip": Recip, "sin": Sin, "cos": Cos, "exp": Exp,
                           "bump": Bump, "parity": Parity}


def expr_from_json(data: Any) -> Expr:
    """
    Reconstruye un árbol desde {"op": ..., "args": [...]}.

    Raises:
        ParseError: Si el formato no es válido
    """
    if not isinstance(data, dict) or "op" not in data:
        raise ParseError(f"Expresión inválida: {data!r}")
    op = data["op"]
    try:
        args = [expr_from_json(a) for a in data.get("args", [])]
        if op == "var":
            return Var()
        if op == "const":
            return Const(HyperReal.from_json(data["value"]))
        if op == "add":
            return Add(*args)
        if op == "mul":
            return Mul(*args)
        if op == "pow":
            return IntPow(args[0], int(data["n"]))
        if op in _UNARY:
            return _UNARY[op](*args)
        if op == "plateau":
            return Plateau(float(data["a"]), *args)
        if op == "piecewise":
            return Piecewise(args[0], data["cmp"], args[1], args[2], args[3])
        if op == "mollify":
            return Mollify(args[0], HyperReal.from_json(data["scale"]), HyperReal.from_json(data["amplitude"]),
                           HyperReal.from_json(data.get("center", [])))
        if op == "testref":
            return TestRef(testfn_from_json(data["g"]), *args)
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise ParseError(f"Nodo '{op}' inválido: {e}") from e
    raise ParseError(f"Operación desconocida: {op}")
