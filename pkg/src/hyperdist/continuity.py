"""
Verificadores de continuidad, convergencia y sombra

Descripción:
    Procedimientos de decisión sobre el cuerpo computable, con tres
    resultados honestos:

      - REFUTED: hay un testigo concreto (un desplazamiento infinitesimal,
        un índice infinito) que se puede volver a evaluar,
      - PROVED: se aplica una regla estructural exacta para la gramática,
      - NOT_REFUTED: ninguna sonda refuta y ninguna regla demuestra.

    La S-continuidad se sondea con un conjunto finito de infinitesimales
    (primero las sondas deducidas del árbol, luego las fijas). La
    *-continuidad se decide estructuralmente recorriendo el camino activo
    del árbol en el punto.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional, Sequence, Union

import numpy as np

from hyperdist.errors import HyperDistError, NotLimited, NotSContinuousHere, NotShadowable, UnsupportedEvaluation
from hyperdist.fn_ast import (COMPARISONS, Const, Expr, Mollify, Mul, Parity, Piecewise, Recip, breakpoint_of,
                              eval_at, evaluate_real, is_standard, shadow_ast, walk)
from hyperdist.hyperreal import HyperReal, NumClass, Ordering
from hyperdist.testfn import TestFn

logger = logging.getLogger(__name__)

Number = Union[int, float]

CONTEXT_OFFSETS: tuple[float, ...] = (0.5, -0.5, 1.0, -1.0)
LADDER: tuple[int, ...] = (10, 100, 1_000, 10_000, 100_000, 1_000_000)
LADDER_TOLERANCES: tuple[float, ...] = (1e-1, 1e-2)


class VerdictKind(Enum):
    REFUTED = "REFUTED"
    NOT_REFUTED = "NOT_REFUTED"
    PROVED = "PROVED"


@dataclass(frozen=True)
class Verdict:
    """
    Resultado de un verificador.

    Args:
        kind: REFUTED, NOT_REFUTED o PROVED
        witness: Sonda o índice que refuta (solo en REFUTED)
        values: Valores evaluados que acompañan al veredicto
        rule: Nombre de la regla estructural (solo en PROVED)
        notes: Información adicional serializable
    """

    kind: VerdictKind
    witness: Optional[HyperReal] = None
    values: tuple[HyperReal, ...] = ()
    rule: Optional[str] = None
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def refuted(self) -> bool:
        return self.kind is VerdictKind.REFUTED

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "witness": self.witness.to_json() if self.witness is not None else None,
            "values": [v.to_json() for v in self.values],
            "rule": self.rule,
            "notes": self.notes,
        }


def default_probes() -> tuple[HyperReal, ...]:
    """±ε, ±2ε, ±ε/2, ±ε², ±ε^(3/2), ±ε^(1/2)."""
    specs = ((1.0, 1), (2.0, 1), (0.5, 1), (1.0, 2), (1.0, "3/2"), (1.0, "1/2"))
    return tuple(HyperReal.epsilon(power).scale(sign * coef) for coef, power in specs for sign in (1.0, -1.0))


@dataclass(frozen=True)
class MonadProbeSet:
    """
    Muestra finita del monad de un punto.

    Args:
        deltas: Sondas fijas
        extra: Sondas de contexto, que se prueban antes que las fijas
    """

    deltas: tuple[HyperReal, ...] = field(default_factory=default_probes)
    extra: tuple[HyperReal, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "deltas", tuple(self.deltas))
        object.__setattr__(self, "extra", tuple(self.extra))
        for delta in self.extra + self.deltas:
            if delta.classify() is not NumClass.NONZERO_INFINITESIMAL:
                raise ValueError(f"La sonda {delta} no es un infinitesimal no nulo")

    def with_extra(self, extra: Sequence[HyperReal]) -> "MonadProbeSet":
        return replace(self, extra=tuple(extra) + self.extra)

    def ordered(self) -> list[HyperReal]:
        seen: set[HyperReal] = set()
        out: list[HyperReal] = []
        for delta in self.extra + self.deltas:
            if delta not in seen:
                seen.add(delta)
                out.append(delta)
        return out


def context_probes(f: Expr, p: Union[HyperReal, Number]) -> list[HyperReal]:
    """
    Sondas deducidas del árbol, en orden de recorrido.

    - Molificador infinitesimal con centro c ≈ p: (c − p) + σ·u para u = ½, −½, 1, −1
    - Producto por una constante infinita Λ: ±(π/2)/Λ
    - Punto de corte c ≈ p con c ≠ p: ±|c − p|/2
    """
    point = HyperReal.coerce(p)
    probes: list[HyperReal] = []
    for node in walk(f, enter_mollify=False):
        if isinstance(node, Mollify) and node.is_singular and node.center.infinitely_close(point):
            offset = node.center - point
            probes.extend(offset + node.scale.scale(u) for u in CONTEXT_OFFSETS)
        elif isinstance(node, Mul):
            for factor in (node.left, node.right):
                if isinstance(factor, Const) and factor.value.classify() is NumClass.INFINITE:
                    step = factor.value.recip().scale(math.pi / 2)
                    probes.extend((step, -step))
        elif isinstance(node, Piecewise):
            c = breakpoint_of(node)
            if c is not None and c.is_limited() and c.infinitely_close(point) and c != point:
                half = abs(c - point).scale(0.5)
                probes.extend((half, -half))
    return [d for d in probes if d.classify() is NumClass.NONZERO_INFINITESIMAL]


# ==================== S-CONTINUIDAD ====================

def _obstruction(f: Expr, t: HyperReal) -> Optional[str]:
    # Primer nodo que impide aplicar las reglas estructurales en t
    for node in walk(f, enter_mollify=False):
        if isinstance(node, Parity):
            return "parity"
        if isinstance(node, Const) and node.value.classify() is NumClass.INFINITE:
            return "infinite-constant"
        if isinstance(node, Mollify):
            if node.is_singular or not (node.amplitude.is_limited() and node.center.is_limited()):
                return "singular-mollifier"
            inner = _obstruction(node.base, (t - node.center) * node.scale.recip())
            if inner is not None:
                return inner
        if isinstance(node, Recip) and eval_at(node.arg, t).is_infinitesimal():
            return "reciprocal-pole"
        if isinstance(node, Piecewise) and breakpoint_of(node) is None:
            return "general-condition"
    return None


def _s_rule(f: Expr, p: float) -> Optional[str]:
    point = HyperReal.from_real(p)
    if _obstruction(f, point) is not None:
        return None
    jump = False
    for node in walk(f, enter_mollify=False):
        if isinstance(node, Piecewise):
            c = breakpoint_of(node)
            if c is not None and c.infinitely_close(point):
                gap = eval_at(node.then, point) - eval_at(node.else_, point)
                if not gap.is_infinitesimal():
                    return None
                jump = jump or not gap.is_zero()
    if jump:
        return "infinitesimal-jump"
    return "standard-continuous" if is_standard(f) else "limited-parameter-continuous"


def s_continuity(f: Expr, p: Number, probes: Optional[MonadProbeSet] = None) -> Verdict:
    """
    Comprueba si f lleva el monad de p al monad de f(p).

    Args:
        f: Función interna
        p: Punto real
        probes: Sondas fijas (por defecto las de MonadProbeSet)

    Returns:
        Verdict: REFUTED con la primera sonda δ tal que f(p+δ) ≉ f(p);
            PROVED si se aplica una regla estructural; NOT_REFUTED si no

    Raises:
        UnsupportedEvaluation: Si f no se puede evaluar en p + δ
    """
    p = float(p)
    probes = (probes or MonadProbeSet()).with_extra(context_probes(f, p))
    base = eval_at(f, p)
    for delta in probes.ordered():
        value = eval_at(f, delta + p)
        if not value.infinitely_close(base):
            logger.info(f"S-continuidad de {f} en {p} refutada con δ = {delta}")
            return Verdict(VerdictKind.REFUTED, witness=delta, values=(base, value), notes={"point": p})
    rule = _s_rule(f, p) if base.is_limited() else None
    if rule is not None:
        return Verdict(VerdictKind.PROVED, values=(base,), rule=rule, notes={"point": p})
    return Verdict(VerdictKind.NOT_REFUTED, values=(base,), notes={"point": p})


def product_s_continuity(f: Expr, h: Expr, p: Number, probes: Optional[MonadProbeSet] = None) -> Verdict:
    """
    S-continuidad del producto f·h en p.

    Se sondea el producto directamente; solo se declara PROVED cuando ambos
    factores están demostrados por reglas de continuidad sin saltos.
    """
    direct = s_continuity(Mul(f, h), p, probes)
    if direct.refuted:
        return direct
    factors = (s_continuity(f, p, probes), s_continuity(h, p, probes))
    if all(v.kind is VerdictKind.PROVED and v.rule != "infinitesimal-jump" for v in factors):
        return Verdict(VerdictKind.PROVED, values=direct.values, rule="product-of-continuous",
                       notes={"point": float(p), "factors": [v.rule for v in factors]})
    return Verdict(VerdictKind.NOT_REFUTED, values=direct.values, notes={"point": float(p)})


# ==================== *-CONTINUIDAD ====================

@dataclass
class _PathState:
    gap: Optional[HyperReal] = None
    branches: Optional[tuple[HyperReal, HyperReal]] = None
    matching: bool = False
    unknown: Optional[str] = None


def _star_path(f: Expr, t: HyperReal, state: _PathState) -> None:
    if state.gap is not None:
        return
    if isinstance(f, (Recip, Parity)):
        state.unknown = state.unknown or type(f).__name__
        return
    if isinstance(f, Mollify):
        _star_path(f.base, (t - f.center) * f.scale.recip(), state)
        return
    if isinstance(f, Piecewise):
        _star_path(f.lhs, t, state)
        _star_path(f.rhs, t, state)
        ordering = eval_at(f.lhs, t).compare(eval_at(f.rhs, t))
        if ordering is Ordering.EQ:
            then_value, else_value = eval_at(f.then, t), eval_at(f.else_, t)
            gap = then_value - else_value
            if not gap.is_zero():
                state.gap = gap
                state.branches = (then_value, else_value)
                return
            state.matching = True
            _star_path(f.then, t, state)
            _star_path(f.else_, t, state)
        else:
            _star_path(f.then if COMPARISONS[f.op](ordering) else f.else_, t, state)
        return
    for child in f.children():
        _star_path(child, t, state)


def star_continuity(f: Expr, q: Union[HyperReal, Number]) -> Verdict:
    """
    *-continuidad estructural en un punto hiperreal q.

    Returns:
        Verdict: REFUTED si en q hay una frontera de Piecewise con salto
            distinto de cero (testigo q, valores de ambas ramas); PROVED si
            el camino activo solo tiene primitivas suaves y fronteras con
            ramas iguales; NOT_REFUTED en otro caso
    """
    point = HyperReal.coerce(q)
    state = _PathState()
    try:
        _star_path(f, point, state)
        if state.gap is None and state.unknown is None:
            eval_at(f, point)
    except HyperDistError as e:
        logger.warning(f"*-continuidad de {f} en {point} sin decidir: {e}")
        return Verdict(VerdictKind.NOT_REFUTED, notes={"error": e.code})
    if state.gap is not None:
        logger.info(f"{f} no es *-continua en {point}: salto {state.gap}")
        return Verdict(VerdictKind.REFUTED, witness=point, values=state.branches,
                       notes={"gap": state.gap.to_json()})
    if state.unknown is not None:
        return Verdict(VerdictKind.NOT_REFUTED, notes={"node": state.unknown})
    rule = "matching-branches" if state.matching else "smooth-composite"
    return Verdict(VerdictKind.PROVED, rule=rule)


# ==================== CONVERGENCIA Y PUNTOS LIMITADOS ====================

def default_omegas() -> tuple[HyperReal, ...]:
    """1/ε, 2/ε, 1/ε²."""
    return HyperReal.epsilon(-1), HyperReal.epsilon(-1).scale(2.0), HyperReal.epsilon(-2)


def _standard_ladder(s: Expr, q: float) -> dict[str, Any]:
    values = evaluate_real(s, np.array(LADDER, dtype=float))
    gaps = np.abs(values - q)
    rows = []
    for tol in LADDER_TOLERANCES:
        start = None
        for i in range(len(LADDER)):
            if np.all(gaps[i:] < tol):
                start = LADDER[i]
                break
        rows.append({"tol": tol, "M": start})
    return {"rows": rows, "converges": all(row["M"] is not None for row in rows)}


def s_convergence(s: Expr, q: Union[HyperReal, Number], omegas: Optional[Sequence[HyperReal]] = None) -> Verdict:
    """
    Comprueba s_ω ≈ q para índices infinitos ω.

    Args:
        s: Sucesión interna (árbol en la variable n)
        q: Límite candidato
        omegas: Índices infinitos de prueba (por defecto 1/ε, 2/ε, 1/ε²)

    Returns:
        Verdict: REFUTED con testigo ω; NOT_REFUTED en otro caso. Para
            árboles estándar notes["standard_ladder"] guarda la comprobación
            ε–M en n = 10, ..., 10⁶

    Raises:
        UnsupportedEvaluation: Si s no se puede evaluar en algún ω
        ValueError: Si algún ω no es infinito
    """
    target = HyperReal.coerce(q)
    omegas = tuple(omegas) if omegas is not None else default_omegas()
    for omega in omegas:
        if omega.classify() is not NumClass.INFINITE or omega < 0:
            raise ValueError(f"El índice {omega} no es un infinito positivo")
        value = eval_at(s, omega)
        if not value.infinitely_close(target):
            logger.info(f"{s} no S-converge a {target}: testigo ω = {omega}")
            return Verdict(VerdictKind.REFUTED, witness=omega, values=(value,))
    notes: dict[str, Any] = {}
    if is_standard(s) and target.is_standard():
        try:
            notes["standard_ladder"] = _standard_ladder(s, target.coefficient(0))
        except UnsupportedEvaluation as e:
            logger.warning(f"Escalera estándar no disponible para {s}: {e}")
    return Verdict(VerdictKind.NOT_REFUTED, notes=notes)


def limited_point(x: Union[HyperReal, Number], q: Union[HyperReal, Number]) -> bool:
    """True si |x − q| es limitado."""
    return (HyperReal.coerce(x) - HyperReal.coerce(q)).is_limited()


# ==================== SOMBRA ====================

@dataclass(frozen=True)
class ShadowResult:
    """
    Sombra estándar F(p) = st f(p).

    Args:
        kind: "ast" si F es un árbol estándar, "table" si solo hay valores
        F: Árbol estándar (None en modo tabla)
        table: Pares (p, st f(p)) en la malla
        max_defect: max |st f(p) − F(p)| sobre la malla
    """

    kind: str
    F: Optional[Expr]
    table: tuple[tuple[float, float], ...]
    max_defect: float

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "F": self.F.to_json() if self.F is not None else None,
                "table": [list(row) for row in self.table], "max_defect": self.max_defect}


def shadow(f: Expr, grid: Sequence[Number], probes: Optional[MonadProbeSet] = None) -> ShadowResult:
    """
    Extrae la sombra estándar de f sobre una malla de reales.

    Raises:
        NotSContinuousHere: Si la S-continuidad se refuta en algún punto
        NotLimited: Si f(p) no es limitado en algún punto
        ValueError: Si la malla está vacía
    """
    points = [float(p) for p in grid]
    if not points:
        raise ValueError("La malla de la sombra no puede estar vacía")
    values: list[float] = []
    for p in points:
        verdict = s_continuity(f, p, probes)
        if verdict.refuted:
            logger.error(f"{f} no es S-continua en {p}")
            raise NotSContinuousHere(f"La función no es S-continua en {p}", point=p,
                                     witness=verdict.witness.to_json())
        value = eval_at(f, p)
        if not value.is_limited():
            raise NotLimited(f"f({p}) = {value} no es limitado", point=p)
        values.append(value.standard_part())
    table = tuple(zip(points, values))

    try:
        F = shadow_ast(f)
        expected = evaluate_real(F, np.array(points))
    except (NotShadowable, UnsupportedEvaluation) as e:
        logger.info(f"Sombra de {f} en modo tabla: {e}")
        return ShadowResult("table", None, table, 0.0)
    defect = float(np.max(np.abs(np.array(values) - expected)))
    return ShadowResult("ast", F, table, defect)


# ==================== SEMINORMAS ====================

@dataclass(frozen=True)
class SeminormFamily:
    """
    Seminormas ‖g‖_k = sup |g^(k)| sobre una malla fija, k = 0..k_max.

    Args:
        k_max: Orden máximo de derivación
        window: Intervalo muestreado
        samples: Número de puntos de la malla
    """

    k_max: int = 4
    window: tuple[float, float] = (-5.0, 5.0)
    samples: int = 2001

    def __post_init__(self) -> None:
        if self.k_max < 0:
            raise ValueError(f"k_max no puede ser negativo: {self.k_max}")
        if not self.window[0] < self.window[1]:
            raise ValueError(f"Ventana inválida: {self.window}")
        if self.samples < 2:
            raise ValueError(f"Se necesitan al menos 2 muestras: {self.samples}")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.window[0], self.window[1], self.samples)

    def norms(self, g: TestFn) -> list[float]:
        jets = g.jets(self.grid, self.k_max)
        factorials = np.array([math.factorial(k) for k in range(self.k_max + 1)], dtype=float)
        return [float(v) for v in np.max(np.abs(jets), axis=1) * factorials]

    def seminorm(self, g: TestFn, k: int) -> float:
        if not 0 <= k <= self.k_max:
            raise ValueError(f"Orden fuera de rango: {k}")
        return self.norms(g)[k]

    def distance(self, g: TestFn, h: TestFn, k: int) -> float:
        """Pseudo-métrica inducida ‖g − h‖_k."""
        return self.seminorm(g - h, k)
