"""
Cálculo de funcionales generalizados

Descripción:
    Un funcional f[g] = st⟨f, *g⟩ se construye sobre un representante
    admitido en T. Las derivadas actúan sobre la función test:
    f^(k)[g] = (−1)^k · f[g^(k)], sin derivar el árbol del representante.

    La equivalencia de representantes (f − h ∈ T₀) y los veredictos de
    pertenencia son de refutación sobre un corpus finito de funciones test.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Any, Optional, Sequence

import numpy as np

from hyperdist.config import DEFAULT_CONFIG, HyperDistConfig, QuadratureConfig, TruncationPolicy
from hyperdist.continuity import MonadProbeSet, SeminormFamily, ShadowResult, Verdict, s_continuity
from hyperdist.errors import (NotAdmitted, NotLimited, NotSContinuousHere, NotShadowable, NotStandardSmooth, OrderCap,
                              UnsupportedEvaluation)
from hyperdist.fn_ast import Add, Expr, Mollify, Mul, Neg, Parity, Piecewise, Recip, eval_at, is_standard, walk
from hyperdist.hyperreal import HyperReal, active_policy, using_policy
from hyperdist.pairing import MembershipResult, MembershipVerdict, PairingStatus, default_corpus, member_T, pair
from hyperdist.testfn import TestFn, deriv_as_testfn

logger = logging.getLogger(__name__)

TREND_RATIO: float = 1e-4
TREND_SLOPE: float = -0.5
NULL_LEVEL: float = 1e-12


class EquivalenceKind(Enum):
    EQUIVALENT_NOT_REFUTED = "EQUIVALENT_NOT_REFUTED"
    DISTINCT = "DISTINCT"


class DiagnosticVerdict(Enum):
    CONSISTENT = "CONSISTENT"
    INCONSISTENT = "INCONSISTENT"


@dataclass(frozen=True)
class EquivalenceVerdict:
    """
    Veredicto de equivalencia: DISTINCT lleva la función test testigo y el
    valor del emparejamiento que no es infinitesimal.
    """

    kind: EquivalenceKind
    witness: Optional[TestFn] = None
    value: Optional[HyperReal] = None

    def __bool__(self) -> bool:
        return self.kind is EquivalenceKind.EQUIVALENT_NOT_REFUTED

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value,
                "witness": self.witness.to_json() if self.witness is not None else None,
                "value": self.value.to_json() if self.value is not None else None}


@dataclass(frozen=True)
class GenFunctional:
    """
    Funcional g ↦ (−1)^k · st⟨rep, *g^(k)⟩.

    Args:
        rep: Representante (función interna admitida en T)
        deriv_order: Orden de derivación k
        label: Nombre para mostrar
        membership: Veredicto de pertenencia calculado al construirlo
    """

    rep: Expr
    deriv_order: int = 0
    label: str = ""
    membership: Optional[MembershipResult] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.deriv_order < 0:
            raise ValueError(f"El orden de derivación no puede ser negativo: {self.deriv_order}")

    def __call__(self, g: TestFn, cfg: Optional[HyperDistConfig] = None) -> float:
        return apply(self, g, cfg)

    def to_dict(self) -> dict[str, Any]:
        return {"rep": self.rep.to_json(), "deriv_order": self.deriv_order, "label": self.label}


@dataclass(frozen=True)
class PointValue:
    value: float
    s_continuity_evidence: Verdict

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "s_continuity": self.s_continuity_evidence.to_dict()}


@dataclass(frozen=True)
class SchwarzDiagnostic:
    """
    Diagnóstico de continuidad secuencial sobre un prefijo finito.

    Args:
        trend: |F[g_n]| para cada n
        seminorm_trend: ‖g_n‖_k para cada n (filas) y k (columnas)
        verdict: CONSISTENT o INCONSISTENT
        precondition_ok: True si la sucesión tiende a 0 en todas las seminormas
    """

    trend: tuple[float, ...]
    seminorm_trend: tuple[tuple[float, ...], ...]
    verdict: DiagnosticVerdict
    precondition_ok: bool

    def to_dict(self) -> dict[str, Any]:
        return {"trend": list(self.trend), "seminorm_trend": [list(row) for row in self.seminorm_trend],
                "verdict": self.verdict.value, "precondition_ok": self.precondition_ok}


# ==================== CONSTRUCCIÓN ====================

@lru_cache(maxsize=256)
def _cached_membership(rep: Expr, corpus: tuple[TestFn, ...], quad: QuadratureConfig,
                       policy: TruncationPolicy) -> MembershipResult:
    with using_policy(policy):
        return member_T(rep, corpus, quad)


def _membership(rep: Expr, corpus: tuple[TestFn, ...], quad: QuadratureConfig) -> MembershipResult:
    return _cached_membership(rep, corpus, quad, active_policy())


def _require_admitted(rep: Expr, corpus: tuple[TestFn, ...], cfg: HyperDistConfig) -> MembershipResult:
    result = _membership(rep, corpus, cfg.quad)
    if result.verdict is MembershipVerdict.REJECTED:
        logger.error(f"Representante rechazado: {rep}")
        raise NotAdmitted(f"{rep} no pertenece a T", membership=result.to_dict())
    return result


def _corpus(corpus: Optional[Sequence[TestFn]], cfg: HyperDistConfig) -> tuple[TestFn, ...]:
    return tuple(corpus) if corpus is not None else tuple(default_corpus(cfg.corpus))


def make_functional(rep: Expr, label: str = "", corpus: Optional[Sequence[TestFn]] = None,
                    cfg: Optional[HyperDistConfig] = None) -> GenFunctional:
    """
    Construye el funcional de un representante tras comprobar que está en T.

    Args:
        rep: Función interna
        label: Nombre del funcional
        corpus: Funciones test para la comprobación (por defecto el corpus de cfg)
        cfg: Configuración

    Returns:
        GenFunctional: Funcional de orden 0

    Raises:
        NotAdmitted: Si member_T rechaza el representante
    """
    cfg = cfg or DEFAULT_CONFIG
    result = _require_admitted(rep, _corpus(corpus, cfg), cfg)
    return GenFunctional(rep, 0, label or str(rep), result)


# ==================== OPERACIONES ====================

def apply(F: GenFunctional, g: TestFn, cfg: Optional[HyperDistConfig] = None) -> float:
    """
    Evalúa F[g] = (−1)^k · st⟨rep, *g^(k)⟩.

    Raises:
        NotLimited: Si el emparejamiento no es limitado
        UnsupportedForm: Si el representante no tiene forma normal soportada
    """
    cfg = cfg or DEFAULT_CONFIG
    k = F.deriv_order
    result = pair(F.rep, deriv_as_testfn(g, k), cfg.quad)
    if result.status is PairingStatus.UNLIMITED:
        logger.error(f"{F.label}[{g}] no es limitado: {result.value}")
        raise NotLimited(f"El emparejamiento {result.value} no es limitado", value=result.value.to_json())
    value = result.value.standard_part()
    return -value if k % 2 else value


def in_T0(f: Expr, corpus: Optional[Sequence[TestFn]] = None,
          cfg: Optional[HyperDistConfig] = None) -> EquivalenceVerdict:
    """
    Comprueba (por refutación) que todos los emparejamientos de f son infinitesimales.

    Returns:
        EquivalenceVerdict: DISTINCT con la primera g cuyo emparejamiento
            no es limitado o tiene |st| > infinitesimal_tol

    Raises:
        NotAdmitted: Si f no pertenece a T
    """
    cfg = cfg or DEFAULT_CONFIG
    test_fns = _corpus(corpus, cfg)
    _require_admitted(f, test_fns, cfg)
    return _pairings_vanish(f, test_fns, cfg)


def _pairings_vanish(f: Expr, test_fns: tuple[TestFn, ...], cfg: HyperDistConfig) -> EquivalenceVerdict:
    for g in test_fns:
        result = pair(f, g, cfg.quad)
        if result.status is PairingStatus.UNLIMITED or abs(result.value.standard_part()) > cfg.infinitesimal_tol:
            logger.info(f"{f} fuera de T₀: ⟨f, *g⟩ = {result.value} para g = {g}")
            return EquivalenceVerdict(EquivalenceKind.DISTINCT, g, result.value)
    return EquivalenceVerdict(EquivalenceKind.EQUIVALENT_NOT_REFUTED)


def equivalent(f: Expr, h: Expr, corpus: Optional[Sequence[TestFn]] = None,
               cfg: Optional[HyperDistConfig] = None) -> EquivalenceVerdict:
    """
    f ~ h si f − h ∈ T₀.

    Raises:
        NotAdmitted: Si f o h no pertenecen a T
    """
    cfg = cfg or DEFAULT_CONFIG
    test_fns = _corpus(corpus, cfg)
    _require_admitted(f, test_fns, cfg)
    _require_admitted(h, test_fns, cfg)
    return _pairings_vanish(Add(f, Neg(h)), test_fns, cfg)


def derivative(F: GenFunctional, cfg: Optional[HyperDistConfig] = None) -> GenFunctional:
    """
    Derivada distribucional: mismo representante, un orden más.

    Raises:
        OrderCap: Si el orden supera deriv_cap
    """
    cfg = cfg or DEFAULT_CONFIG
    order = F.deriv_order + 1
    if order > cfg.deriv_cap:
        logger.error(f"Derivada de orden {order} por encima del límite {cfg.deriv_cap}")
        raise OrderCap(f"Orden de derivación {order} mayor que el límite {cfg.deriv_cap}", k=order,
                       cap=cfg.deriv_cap)
    return replace(F, deriv_order=order, label=f"{F.label}'")


def customary_product(smooth_std: Expr, F: GenFunctional, corpus: Optional[Sequence[TestFn]] = None,
                      cfg: Optional[HyperDistConfig] = None) -> GenFunctional:
    """
    Producto de una función estándar suave por un funcional de orden 0.

    Raises:
        NotStandardSmooth: Si el factor no es estándar y suave o F es una derivada
    """
    if F.deriv_order != 0:
        raise NotStandardSmooth("El producto solo se define para funcionales de orden 0",
                                deriv_order=F.deriv_order)
    if not is_standard(smooth_std):
        raise NotStandardSmooth(f"El factor {smooth_std} tiene constantes no estándar")
    for node in walk(smooth_std):
        if isinstance(node, (Piecewise, Parity, Recip, Mollify)):
            raise NotStandardSmooth(f"El factor {smooth_std} contiene un nodo {type(node).__name__}")
    return make_functional(Mul(smooth_std, F.rep), f"({smooth_std})·{F.label}", corpus, cfg)


def value_at(F: GenFunctional, p: float, probes: Optional[MonadProbeSet] = None) -> PointValue:
    """
    Valor puntual st rep(p) donde el representante es S-continuo.

    Raises:
        NotSContinuousHere: Si la S-continuidad se refuta en p
        NotLimited: Si rep(p) no es limitado
        UnsupportedEvaluation: Si F es una derivada
    """
    if F.deriv_order != 0:
        raise UnsupportedEvaluation("Los valores puntuales solo se definen para funcionales de orden 0")
    verdict = s_continuity(F.rep, p, probes)
    if verdict.refuted:
        logger.error(f"{F.label} no es S-continua en {p}")
        raise NotSContinuousHere(f"{F.label} no es S-continua en {p}", point=p, witness=verdict.witness.to_json())
    value = eval_at(F.rep, p)
    if not value.is_limited():
        raise NotLimited(f"{F.label}({p}) = {value} no es limitado", point=p)
    return PointValue(value.standard_part(), verdict)


def sum_at(F: GenFunctional, G: GenFunctional, p: float, sign: int = 1,
           probes: Optional[MonadProbeSet] = None) -> PointValue:
    """Valor puntual de F + G (sign = 1) o F − G (sign = −1)."""
    if sign not in (1, -1):
        raise ValueError(f"sign debe ser 1 o -1: {sign}")
    rep = Add(F.rep, G.rep if sign == 1 else Neg(G.rep))
    return value_at(GenFunctional(rep, 0, f"{F.label}{'+' if sign == 1 else '-'}{G.label}"), p, probes)


# ==================== DIAGNÓSTICO DE SCHWARZ ====================

def trends_to_zero(values: Sequence[float]) -> bool:
    """
    Heurística sobre un prefijo finito.

    La mitad final debe ser no creciente y, además, acabar por debajo de
    1e−4 veces el máximo o caer con pendiente log-log ≤ −0.5. Un prefijo
    nulo (máximo ≤ 1e−12) tiende a cero.
    """
    mags = np.abs(np.asarray(values, dtype=float))
    if mags.size == 0:
        raise ValueError("La sucesión está vacía")
    peak = float(mags.max())
    if peak <= NULL_LEVEL:
        return True
    start = mags.size // 2
    tail = mags[start:]
    if np.any(tail[1:] > tail[:-1] * (1 + 1e-12) + NULL_LEVEL):
        return False
    if tail[-1] <= TREND_RATIO * peak:
        return True
    if tail.size < 2 or np.any(tail <= 0):
        return False
    n = np.arange(start + 1, mags.size + 1, dtype=float)
    slope = np.polyfit(np.log(n), np.log(tail), 1)[0]
    return bool(slope <= TREND_SLOPE)


def schwarz_class_diagnostic(F: GenFunctional, seq: Sequence[TestFn], n_max: Optional[int] = None,
                             cfg: Optional[HyperDistConfig] = None,
                             seminorms: Optional[SeminormFamily] = None) -> SchwarzDiagnostic:
    """
    Comprueba sobre un prefijo finito que F[g_n] → 0 cuando g_n → 0 en todas
    las seminormas con soporte común.

    Args:
        F: Funcional
        seq: Sucesión de funciones test
        n_max: Longitud del prefijo (por defecto toda la sucesión)
        cfg: Configuración
        seminorms: Familia de seminormas (por defecto sobre el soporte común)

    Returns:
        SchwarzDiagnostic: INCONSISTENT con precondition_ok = False si la
            sucesión no es nula en las seminormas
    """
    prefix = list(seq)[:n_max] if n_max is not None else list(seq)
    if not prefix:
        raise ValueError("La sucesión de funciones test está vacía")
    bound = max(max(abs(g.support().lo), abs(g.support().hi)) for g in prefix)
    seminorms = seminorms or SeminormFamily(window=(-bound, bound))

    trend = tuple(abs(apply(F, g, cfg)) for g in prefix)
    seminorm_trend = tuple(tuple(seminorms.norms(g)) for g in prefix)
    precondition_ok = all(trends_to_zero([row[k] for row in seminorm_trend]) for k in range(seminorms.k_max + 1))
    if not precondition_ok:
        logger.warning(f"La sucesión no tiende a 0 en las seminormas (soporte común {bound})")
    consistent = precondition_ok and trends_to_zero(trend)
    verdict = DiagnosticVerdict.CONSISTENT if consistent else DiagnosticVerdict.INCONSISTENT
    logger.info(f"Diagnóstico de Schwarz para {F.label}: {verdict.value}")
    return SchwarzDiagnostic(trend, seminorm_trend, verdict, precondition_ok)


def shadow_equivalence(f: Expr, result: ShadowResult, corpus: Optional[Sequence[TestFn]] = None,
                       cfg: Optional[HyperDistConfig] = None) -> EquivalenceVerdict:
    """
    Comprueba que la sombra F es equivalente a f.

    Raises:
        NotShadowable: Si la sombra solo existe como tabla
    """
    if result.F is None:
        raise NotShadowable("La sombra en modo tabla no tiene árbol con el que comparar")
    return equivalent(f, result.F, corpus, cfg)
