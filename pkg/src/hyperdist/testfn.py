"""
Funciones test: el espacio D de funciones C∞ con soporte acotado

Descripción:
    Una función test es un árbol inmutable de nodos:

      - Bump(center, halfwidth): b((x − center)/halfwidth)
      - PolyMod(coeffs, inner): (Σ coeffs[i]·x^i)·inner(x)
      - Scale(factor, inner): factor·inner(x)
      - Shift(offset, inner): inner(x − offset)
      - LinComb(terms): Σ w·g(x)
      - Plateau(inner, outer): 1 en |x| ≤ inner, 0 en |x| ≥ outer
      - Deriv(k, inner): la derivada k-ésima de inner

    Todas las evaluaciones pasan por jets(x, orden), que devuelve los
    coeficientes de Taylor normalizados en cada punto, así que cualquier
    derivada sale de la misma recurrencia.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from hyperdist.errors import OrderCap, ParseError
from hyperdist.hyperreal import HyperReal, NumClass
from hyperdist.taylor import Jet, bump_jets, bump_values, plateau_jets

logger = logging.getLogger(__name__)

DERIV_CAP: int = 12


@dataclass(frozen=True)
class SupportInterval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"Intervalo de soporte inválido: [{self.lo}, {self.hi}]")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def hull(self, other: "SupportInterval") -> "SupportInterval":
        return SupportInterval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, lo: float, hi: float) -> Optional[tuple[float, float]]:
        a, b = max(self.lo, lo), min(self.hi, hi)
        return (a, b) if a < b else None

    def to_json(self) -> list[float]:
        return [self.lo, self.hi]


class TestFn:
    """
    Nodo base de las funciones test.

    Las subclases implementan jets() y support(); el resto se deriva.
    """

    __test__ = False  # evita que pytest intente recogerla como clase de tests

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        raise NotImplementedError

    def support(self) -> SupportInterval:
        raise NotImplementedError

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError

    def values(self, x: np.ndarray) -> np.ndarray:
        """Valores g(x) en un array de puntos."""
        return self.jets(x, 0)[0]

    def at(self, t: HyperReal) -> HyperReal:
        """
        Evalúa la extensión *g en un punto hiperreal por composición de Taylor.

        Args:
            t: Punto hiperreal

        Returns:
            HyperReal: g(st t) + Σ c_k·δ^k con δ = t − st t; 0 si t es infinito
        """
        if t.classify() is NumClass.INFINITE:
            return HyperReal.zero(t.policy)
        s = t.coefficient(0)
        delta = t - s
        if delta.is_zero():
            return HyperReal.from_real(float(self.values(np.array([s]))[0]), t.policy)
        order = delta.taylor_order()
        coeffs = self.jets(np.array([s]), order)[:, 0]
        return delta.compose([float(c) for c in coeffs])

    def __add__(self, other: "TestFn") -> "TestFn":
        if not isinstance(other, TestFn):
            return NotImplemented
        return LinComb(((1.0, self), (1.0, other)))

    def __sub__(self, other: "TestFn") -> "TestFn":
        if not isinstance(other, TestFn):
            return NotImplemented
        return LinComb(((1.0, self), (-1.0, other)))

    def __mul__(self, factor: float) -> "TestFn":
        if not isinstance(factor, (int, float)):
            return NotImplemented
        return Scale(float(factor), self)

    __rmul__ = __mul__

    def __neg__(self) -> "TestFn":
        return Scale(-1.0, self)


@dataclass(frozen=True)
class Bump(TestFn):
    center: float = 0.0
    halfwidth: float = 1.0

    def __post_init__(self) -> None:
        if self.halfwidth <= 0:
            raise ValueError(f"El semiancho debe ser positivo: {self.halfwidth}")

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        t = (np.atleast_1d(np.asarray(x, dtype=float)) - self.center) / self.halfwidth
        return Jet(bump_jets(t, order)).rescale(1.0 / self.halfwidth).coeffs

    def values(self, x: np.ndarray) -> np.ndarray:
        t = (np.atleast_1d(np.asarray(x, dtype=float)) - self.center) / self.halfwidth
        return bump_values(t)

    def support(self) -> SupportInterval:
        return SupportInterval(self.center - self.halfwidth, self.center + self.halfwidth)

    def to_json(self) -> dict[str, Any]:
        return {"kind": "bump", "center": self.center, "halfwidth": self.halfwidth}


@dataclass(frozen=True)
class PolyMod(TestFn):
    coeffs: tuple[float, ...]
    inner: TestFn

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        var = Jet.variable(x, order)
        poly = Jet.constant(0.0, order, x.size)
        for c in reversed(self.coeffs):
            poly = poly * var + c
        return (poly * Jet(self.inner.jets(x, order))).coeffs

    def support(self) -> SupportInterval:
        return self.inner.support()

    def to_json(self) -> dict[str, Any]:
        return {"kind": "polymod", "coeffs": list(self.coeffs), "inner": self.inner.to_json()}


@dataclass(frozen=True)
class Scale(TestFn):
    factor: float
    inner: TestFn

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        return self.factor * self.inner.jets(x, order)

    def support(self) -> SupportInterval:
        return self.inner.support()

    def to_json(self) -> dict[str, Any]:
        return {"kind": "scale", "factor": self.factor, "inner": self.inner.to_json()}


@dataclass(frozen=True)
class Shift(TestFn):
    offset: float
    inner: TestFn

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        return self.inner.jets(np.atleast_1d(np.asarray(x, dtype=float)) - self.offset, order)

    def support(self) -> SupportInterval:
        s = self.inner.support()
        return SupportInterval(s.lo + self.offset, s.hi + self.offset)

    def to_json(self) -> dict[str, Any]:
        return {"kind": "shift", "offset": self.offset, "inner": self.inner.to_json()}


@dataclass(frozen=True)
class LinComb(TestFn):
    terms: tuple[tuple[float, TestFn], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("LinComb necesita al menos un término")
        object.__setattr__(self, "terms", tuple((float(w), g) for w, g in self.terms))

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        total = None
        for w, g in self.terms:
            part = w * g.jets(x, order)
            total = part if total is None else total + part
        return total

    def support(self) -> SupportInterval:
        supports = [g.support() for w, g in self.terms if w != 0.0] or [self.terms[0][1].support()]
        hull = supports[0]
        for s in supports[1:]:
            hull = hull.hull(s)
        return hull

    def to_json(self) -> dict[str, Any]:
        return {"kind": "lincomb", "terms": [{"weight": w, "fn": g.to_json()} for w, g in self.terms]}


@dataclass(frozen=True)
class Plateau(TestFn):
    """Meseta suave: 1 en [−inner, inner], 0 fuera de [−outer, outer]."""

    inner: float
    outer: float

    def __post_init__(self) -> None:
        if not 0 <= self.inner < self.outer:
            raise ValueError(f"Meseta inválida: se requiere 0 <= {self.inner} < {self.outer}")

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        return plateau_jets(x, self.inner, self.outer, order)

    def support(self) -> SupportInterval:
        return SupportInterval(-self.outer, self.outer)

    def to_json(self) -> dict[str, Any]:
        return {"kind": "plateau", "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True)
class Deriv(TestFn):
    k: int
    inner: TestFn

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError(f"El orden de derivación no puede ser negativo: {self.k}")

    def jets(self, x: np.ndarray, order: int) -> np.ndarray:
        base = self.inner.jets(x, order + self.k)
        # coeficiente j de g^(k) = (j+k)!/j! · coeficiente j+k de g
        j = np.arange(order + 1)
        factor = np.array([math.perm(i + self.k, self.k) for i in j], dtype=float)
        return base[self.k:] * factor.reshape(-1, 1)

    def support(self) -> SupportInterval:
        return self.inner.support()

    def to_json(self) -> dict[str, Any]:
        return {"kind": "deriv", "k": self.k, "inner": self.inner.to_json()}


# ==================== OPERACIONES ====================

def support(g: TestFn) -> SupportInterval:
    """
    Soporte estructural de una función test.

    Args:
        g: Función test

    Returns:
        SupportInterval: intervalo fuera del cual g se anula
    """
    return g.support()


def deriv_eval(g: TestFn, k: int, x: float, cap: int = DERIV_CAP) -> float:
    """
    Evalúa g^(k)(x) con diferenciación hacia delante en modo Taylor.

    Args:
        g: Función test
        k: Orden de derivación (0 devuelve g(x))
        x: Punto real
        cap: Orden máximo admitido

    Returns:
        float: g^(k)(x), exactamente 0 fuera del soporte

    Raises:
        OrderCap: Si k > cap
        ValueError: Si k < 0
    """
    if k < 0:
        raise ValueError(f"El orden de derivación no puede ser negativo: {k}")
    if k > cap:
        logger.error(f"Derivada de orden {k} por encima del límite {cap}")
        raise OrderCap(f"Orden de derivación {k} mayor que el límite {cap}", k=k, cap=cap)
    if not g.support().contains(x):
        return 0.0
    coeff = g.jets(np.array([float(x)]), k)[k, 0]
    return float(coeff * math.factorial(k))


def deriv_as_testfn(g: TestFn, k: int) -> TestFn:
    """g^(k) como función test; k = 0 devuelve g tal cual."""
    if k == 0:
        return g
    if isinstance(g, Deriv):
        return Deriv(g.k + k, g.inner)
    return Deriv(k, g)


# ==================== JSON ====================

def testfn_from_json(data: Any) -> TestFn:
    """
    Reconstruye una función test a partir de su JSON.

    Raises:
        ParseError: Si el formato no es válido
    """
    if not isinstance(data, dict) or "kind" not in data:
        raise ParseError(f"Función test inválida: {data!r}")
    kind = data["kind"]
    try:
        if kind == "bump":
            return Bump(float(data.get("center", 0.0)), float(data.get("halfwidth", 1.0)))
        if kind == "polymod":
            return PolyMod(tuple(data["coeffs"]), testfn_from_json(data["inner"]))
        if kind == "scale":
            return Scale(float(data["factor"]), testfn_from_json(data["inner"]))
        if kind == "shift":
            return Shift(float(data["offset"]), testfn_from_json(data["inner"]))
        if kind == "lincomb":
            return LinComb(tuple((float(t["weight"]), testfn_from_json(t["fn"])) for t in data["terms"]))
        if kind == "plateau":
            return Plateau(float(data["inner"]), float(data["outer"]))
        if kind == "deriv":
            return Deriv(int(data["k"]), testfn_from_json(data["inner"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Función test '{kind}' inválida: {e}") from e
    raise ParseError(f"Tipo de función test desconocido: {kind}")


def parse_testfn_spec(text: str) -> TestFn:
    """
    Lee la forma corta de la CLI: "bump:c,h" o "plateau:a,b".

    Raises:
        ParseError: Si el texto no tiene ese formato
    """
    kind, _, params = text.partition(":")
    try:
        values = [float(v) for v in params.split(",")] if params else []
        if kind == "bump" and len(values) == 2:
            return Bump(values[0], values[1])
        if kind == "plateau" and len(values) == 2:
            return Plateau(values[0], values[1])
    except ValueError as e:
        raise ParseError(f"Función test inválida '{text}': {e}") from e
    raise ParseError(f"Función test inválida '{text}': se esperaba bump:c,h o plateau:a,b")
