"""
Núcleo hiperreal: series truncadas en un infinitesimal ε

Descripción:
    Un HyperReal es una serie formal dispersa Σ a_q·ε^q con exponentes
    racionales exactos y coeficientes reales en doble precisión. Los
    términos con exponente mayor que policy.max_order se descartan, de modo
    que cada valor es un desarrollo asintótico hasta ese orden.

    El orden es lexicográfico: 0 < ε < r para todo real r > 0. La parte
    estándar es el coeficiente de ε⁰; la clasificación (cero, infinitesimal,
    apreciable, infinito) mira el exponente del primer término significativo.

    La aritmética es exacta sobre los exponentes conservados: zero_tol solo
    interviene en classify e infinitely_close.
"""

import logging
import math
from contextlib import contextmanager
from contextvars import ContextVar
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable, Iterator, Optional, Sequence, Union

from hyperdist.config import TruncationPolicy
from hyperdist.errors import DivisionByZero, NotLimited, ParseError

logger = logging.getLogger(__name__)

DEFAULT_POLICY: TruncationPolicy = TruncationPolicy()
_ACTIVE_POLICY: ContextVar[TruncationPolicy] = ContextVar("active_policy", default=DEFAULT_POLICY)

Term = tuple[Fraction, float]
Number = Union[int, float]


class NumClass(Enum):
    ZERO = "ZERO"
    NONZERO_INFINITESIMAL = "NONZERO_INFINITESIMAL"
    APPRECIABLE = "APPRECIABLE"
    INFINITE = "INFINITE"


class Ordering(Enum):
    LT = -1
    EQ = 0
    GT = 1


def _coarser(p: TruncationPolicy, q: TruncationPolicy) -> TruncationPolicy:
    if p is q or p == q:
        return p
    return p if p.max_order <= q.max_order else q


def active_policy() -> TruncationPolicy:
    """Política que usan los HyperReal construidos sin política explícita."""
    return _ACTIVE_POLICY.get()


@contextmanager
def using_policy(policy: TruncationPolicy) -> Iterator[TruncationPolicy]:
    """
    Activa una política de truncamiento dentro de un bloque with.

    Los valores creados fuera del bloque conservan su política; al combinarse
    con valores nuevos gana la de menor max_order.

    Args:
        policy: Política a activar

    Yields:
        TruncationPolicy: La política activada
    """
    token = _ACTIVE_POLICY.set(policy)
    logger.debug(f"Política activa: max_order={policy.max_order}, max_terms={policy.max_terms}")
    try:
        yield policy
    finally:
        _ACTIVE_POLICY.reset(token)


def _cap_terms(terms: list[Term], policy: TruncationPolicy) -> list[Term]:
    if len(terms) > policy.max_terms:
        logger.warning(f"Serie recortada a {policy.max_terms} términos (tenía {len(terms)})")
        return terms[:policy.max_terms]
    return terms


class HyperReal:
    """
    Elemento del fragmento computable de *R.

    Es inmutable: todas las operaciones devuelven valores nuevos.

    Args:
        terms: Pares (exponente, coeficiente) en cualquier orden; los
            exponentes repetidos se suman y los coeficientes nulos se eliminan
        policy: Política de truncamiento (por defecto max_order = 6)
    """

    __slots__ = ("_terms", "_policy")

    def __init__(self, terms: Iterable[tuple[Any, Number]] = (),
                 policy: Optional[TruncationPolicy] = None) -> None:
        policy = policy or active_policy()
        acc: dict[Fraction, float] = {}
        for exp, coef in terms:
            e = Fraction(exp)
            acc[e] = acc.get(e, 0.0) + float(coef)
        kept: list[Term] = sorted((e, c) for e, c in acc.items() if c != 0.0 and e <= policy.max_order)
        self._terms: tuple[Term, ...] = tuple(_cap_terms(kept, policy))
        self._policy: TruncationPolicy = policy

    @classmethod
    def _raw(cls, terms: list[Term], policy: TruncationPolicy) -> "HyperReal":
        # terms ya ordenados, sin ceros y dentro de max_order
        obj = cls.__new__(cls)
        obj._terms = tuple(_cap_terms(terms, policy))
        obj._policy = policy
        return obj

    # ==================== CONSTRUCTORES ====================

    @classmethod
    def from_real(cls, r: Number, policy: Optional[TruncationPolicy] = None) -> "HyperReal":
        """
        Embebe un real estándar como serie de un solo término ε⁰.

        Args:
            r: Número real
            policy: Política de truncamiento

        Returns:
            HyperReal: {ε⁰: r}, o la serie vacía si r == 0
        """
        policy = policy or active_policy()
        r = float(r)
        return cls._raw([(Fraction(0), r)] if r != 0.0 else [], policy)

    @classmethod
    def epsilon(cls, power: Any = 1, policy: Optional[TruncationPolicy] = None) -> "HyperReal":
        """
        Devuelve la potencia ε^power del generador infinitesimal.

        Args:
            power: Exponente racional (entero, Fraction o "p/q")
            policy: Política de truncamiento

        Returns:
            HyperReal: {ε^power: 1}
        """
        return cls([(Fraction(power), 1.0)], policy)

    @classmethod
    def zero(cls, policy: Optional[TruncationPolicy] = None) -> "HyperReal":
        return cls._raw([], policy or active_policy())

    @classmethod
    def coerce(cls, value: Union["HyperReal", Number], policy: Optional[TruncationPolicy] = None) -> "HyperReal":
        if isinstance(value, HyperReal):
            return value
        if isinstance(value, (int, float)):
            return cls.from_real(value, policy)
        raise TypeError(f"No se puede convertir {type(value).__name__} a HyperReal")

    # ==================== CONSULTAS ====================

    @property
    def terms(self) -> tuple[Term, ...]:
        return self._terms

    @property
    def policy(self) -> TruncationPolicy:
        return self._policy

    def is_zero(self) -> bool:
        return not self._terms

    def is_standard(self) -> bool:
        """True si la serie es un real (solo el término ε⁰ o vacía)."""
        return all(e == 0 for e, _ in self._terms)

    @property
    def leading_exponent(self) -> Optional[Fraction]:
        return self._terms[0][0] if self._terms else None

    @property
    def leading_coefficient(self) -> float:
        return self._terms[0][1] if self._terms else 0.0

    def coefficient(self, exp: Any) -> float:
        """Coeficiente de ε^exp (0.0 si no aparece)."""
        e = Fraction(exp)
        for te, tc in self._terms:
            if te == e:
                return tc
        return 0.0

    def significant_lead(self) -> Optional[Term]:
        """Primer término con |coeficiente| > zero_tol, o None."""
        tol: float = self._policy.zero_tol
        for e, c in self._terms:
            if abs(c) > tol:
                return (e, c)
        return None

    # ==================== ARITMÉTICA ====================

    def __add__(self, other: Union["HyperReal", Number]) -> "HyperReal":
        if not isinstance(other, (HyperReal, int, float)):
            return NotImplemented
        other = HyperReal.coerce(other, self._policy)
        policy = _coarser(self._policy, other._policy)
        acc: dict[Fraction, float] = dict(self._terms)
        for e, c in other._terms:
            acc[e] = acc.get(e, 0.0) + c
        terms = sorted((e, c) for e, c in acc.items() if c != 0.0 and e <= policy.max_order)
        return HyperReal._raw(terms, policy)

    __radd__ = __add__

    def __neg__(self) -> "HyperReal":
        return HyperReal._raw([(e, -c) for e, c in self._terms], self._policy)

    def __pos__(self) -> "HyperReal":
        return self

    def __sub__(self, other: Union["HyperReal", Number]) -> "HyperReal":
        if not isinstance(other, (HyperReal, int, float)):
            return NotImplemented
        return self + (-HyperReal.coerce(other, self._policy))

    def __rsub__(self, other: Number) -> "HyperReal":
        return HyperReal.coerce(other, self._policy) - self

    def __mul__(self, other: Union["HyperReal", Number]) -> "HyperReal":
        if isinstance(other, (int, float)):
            return self.scale(other)
        if not isinstance(other, HyperReal):
            return NotImplemented
        policy = _coarser(self._policy, other._policy)
        return _cauchy_product(self._terms, other._terms, policy.max_order, policy)

    def __rmul__(self, other: Number) -> "HyperReal":
        if isinstance(other, (int, float)):
            return self.scale(other)
        return NotImplemented

    def scale(self, r: Number) -> "HyperReal":
        """Multiplica todos los coeficientes por el real r."""
        r = float(r)
        if r == 0.0:
            return HyperReal._raw([], self._policy)
        return HyperReal._raw([(e, c * r) for e, c in self._terms if c * r != 0.0], self._policy)

    def shift(self, q: Any) -> "HyperReal":
        """Multiplica por ε^q (desplaza todos los exponentes)."""
        q = Fraction(q)
        return HyperReal([(e + q, c) for e, c in self._terms], self._policy)

    def recip(self) -> "HyperReal":
        """
        Inverso multiplicativo.

        Escribe a = c·ε^e·(1 + r) con r de exponentes positivos y suma la
        serie geométrica Σ(−r)^k con una política de trabajo ampliada en |e|.

        Returns:
            HyperReal: r tal que a·r = 1 en los exponentes ≤ max_order − |e|

        Raises:
            DivisionByZero: Si la serie es cero
        """
        if not self._terms:
            logger.error("Intento de invertir el hiperreal cero")
            raise DivisionByZero("No se puede invertir el hiperreal cero")
        lead_e, lead_c = self._terms[0]
        policy = self._policy
        work_order = policy.max_order + abs(lead_e)
        rest: list[Term] = [(e - lead_e, -c / lead_c) for e, c in self._terms[1:]]

        total: dict[Fraction, float] = {Fraction(0): 1.0}
        power: list[Term] = [(Fraction(0), 1.0)]
        while rest:
            power = _cauchy_product(power, rest, work_order, None)
            if not power:
                break
            for e, c in power:
                total[e] = total.get(e, 0.0) + c
        inv_lead: float = 1.0 / lead_c
        return HyperReal([(e - lead_e, c * inv_lead) for e, c in total.items()], policy)

    def __truediv__(self, other: Union["HyperReal", Number]) -> "HyperReal":
        if isinstance(other, (int, float)):
            if other == 0:
                raise DivisionByZero("División por cero")
            return self.scale(1.0 / other)
        if not isinstance(other, HyperReal):
            return NotImplemented
        return self * other.recip()

    def __rtruediv__(self, other: Number) -> "HyperReal":
        return HyperReal.coerce(other, self._policy) * self.recip()

    def __pow__(self, n: int) -> "HyperReal":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.recip() ** (-n)
        result: HyperReal = HyperReal.from_real(1.0, self._policy)
        base: HyperReal = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __abs__(self) -> "HyperReal":
        return -self if self._terms and self._terms[0][1] < 0 else self

    # ==================== ORDEN ====================

    def compare(self, other: Union["HyperReal", Number]) -> Ordering:
        """
        Compara con el orden lexicográfico inducido por 0 < ε < r.

        Returns:
            Ordering: signo del primer coeficiente de self − other
        """
        diff = self - HyperReal.coerce(other, self._policy)
        if not diff._terms:
            return Ordering.EQ
        return Ordering.GT if diff._terms[0][1] > 0 else Ordering.LT

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, float)):
            other = HyperReal.from_real(other, self._policy)
        if not isinstance(other, HyperReal):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def __lt__(self, other: Union["HyperReal", Number]) -> bool:
        return self.compare(other) is Ordering.LT

    def __le__(self, other: Union["HyperReal", Number]) -> bool:
        return self.compare(other) is not Ordering.GT

    def __gt__(self, other: Union["HyperReal", Number]) -> bool:
        return self.compare(other) is Ordering.GT

    def __ge__(self, other: Union["HyperReal", Number]) -> bool:
        return self.compare(other) is not Ordering.LT

    def __bool__(self) -> bool:
        return bool(self._terms)

    # ==================== PARTE ESTÁNDAR Y CLASES ====================

    def classify(self) -> NumClass:
        """
        Clasifica según el exponente del primer término significativo.
        """
        lead = self.significant_lead()
        if lead is None:
            return NumClass.ZERO
        if lead[0] < 0:
            return NumClass.INFINITE
        if lead[0] > 0:
            return NumClass.NONZERO_INFINITESIMAL
        return NumClass.APPRECIABLE

    def standard_part(self) -> float:
        """
        Parte estándar: el coeficiente de ε⁰.

        Raises:
            NotLimited: Si el número es infinito
        """
        if self.classify() is NumClass.INFINITE:
            logger.error(f"Parte estándar de un número infinito: {self}")
            raise NotLimited(f"El número {self} no es limitado", value=self.to_json())
        return self.coefficient(0)

    def is_limited(self) -> bool:
        return self.classify() is not NumClass.INFINITE

    def is_infinitesimal(self) -> bool:
        return self.classify() in (NumClass.ZERO, NumClass.NONZERO_INFINITESIMAL)

    def infinitely_close(self, other: Union["HyperReal", Number]) -> bool:
        return (self - HyperReal.coerce(other, self._policy)).is_infinitesimal()

    # ==================== COMPOSICIÓN DE TAYLOR ====================

    def taylor_order(self) -> int:
        """
        Número de potencias de este infinitesimal que caben en max_order.

        Returns:
            int: K tal que K·lead ≤ max_order < (K+1)·lead (0 para la serie vacía)
        """
        if not self._terms:
            return 0
        lead = self._terms[0][0]
        if lead <= 0:
            raise ValueError(f"taylor_order requiere un infinitesimal, exponente inicial {lead}")
        return math.floor(self._policy.max_order / lead)

    def compose(self, coeffs: Sequence[Union["HyperReal", Number]]) -> "HyperReal":
        """
        Evalúa el polinomio de Taylor Σ c_k·δ^k en δ = self (Horner).

        Args:
            coeffs: Coeficientes c_0, c_1, ... (reales o hiperreales)

        Returns:
            HyperReal: valor truncado según la política de self
        """
        result: HyperReal = HyperReal.zero(self._policy)
        for c in reversed(coeffs):
            result = result * self + HyperReal.coerce(c, self._policy)
        return result

    def with_policy(self, policy: TruncationPolicy) -> "HyperReal":
        """Misma serie con otra política (re-trunca si es más gruesa)."""
        return HyperReal(self._terms, policy)

    # ==================== SERIALIZACIÓN ====================

    def to_json(self) -> list[dict[str, Any]]:
        return [{"exp": str(e), "coef": c} for e, c in self._terms]

    @classmethod
    def from_json(cls, data: Any, policy: Optional[TruncationPolicy] = None) -> "HyperReal":
        """
        Lee una serie desde [{"exp": "p/q", "coef": x}, ...].

        Raises:
            ParseError: Si el formato no es válido
        """
        if isinstance(data, (int, float)):
            return cls.from_real(data, policy)
        if not isinstance(data, list):
            raise ParseError(f"Se esperaba una lista de términos, no {type(data).__name__}")
        try:
            return cls([(Fraction(str(item["exp"])), float(item["coef"])) for item in data], policy)
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
            raise ParseError(f"Término hiperreal inválido: {e}") from e

    def __repr__(self) -> str:
        return f"HyperReal({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts: list[str] = []
        for e, c in self._terms:
            if e == 0:
                parts.append(f"{c:g}")
            elif e == 1:
                parts.append(f"{c:g}·ε")
            else:
                parts.append(f"{c:g}·ε^{e}")
        return " + ".join(parts).replace("+ -", "- ")


def _cauchy_product(a: Sequence[Term], b: Sequence[Term], max_order: Fraction,
                    policy: Optional[TruncationPolicy]) -> Any:
    # Producto de Cauchy de dos listas ordenadas; corta en max_order.
    acc: dict[Fraction, float] = {}
    for ea, ca in a:
        for eb, cb in b:
            e = ea + eb
            if e > max_order:
                break
            acc[e] = acc.get(e, 0.0) + ca * cb
    terms = sorted((e, c) for e, c in acc.items() if c != 0.0)
    if policy is None:
        return terms
    return HyperReal._raw(terms, policy)


# ==================== API FUNCIONAL ====================

def from_real(r: Number, policy: Optional[TruncationPolicy] = None) -> HyperReal:
    return HyperReal.from_real(r, policy)


def epsilon(power: Any = 1, policy: Optional[TruncationPolicy] = None) -> HyperReal:
    return HyperReal.epsilon(power, policy)


def add(a: HyperReal, b: HyperReal) -> HyperReal:
    return a + b


def sub(a: HyperReal, b: HyperReal) -> HyperReal:
    return a - b


def neg(a: HyperReal) -> HyperReal:
    return -a


def mul(a: HyperReal, b: HyperReal) -> HyperReal:
    return a * b


def recip(a: HyperReal) -> HyperReal:
    return a.recip()


def compare(a: HyperReal, b: HyperReal) -> Ordering:
    return a.compare(b)


def standard_part(a: HyperReal) -> float:
    return a.standard_part()


def classify(a: HyperReal) -> NumClass:
    return a.classify()


def infinitely_close(a: HyperReal, b: HyperReal) -> bool:
    return a.infinitely_close(b)
