"""
Producto casi-interno ⟨f, *g⟩ = *∫ f·*g

Descripción:
    Reduce la función interna f a una forma normal, suma de términos

      - REGULAR: coef·h(x), con toda la dependencia en ε dentro de
        constantes hiperreales; se integra coeficiente a coeficiente sobre
        el soporte de g,
      - MOLLIFIED: coef·h(x)·A·base((x − c)/σ) con σ infinitesimal; el
        cambio x = c + σu da coef·A·σ·∫ base(u)·h(c + σu)·g(c + σu) du
        sobre el soporte de la base, con g y h evaluadas en el punto
        hiperreal por composición de Taylor,

    y suma las integrales como un HyperReal. Los escalares exteriores se
    separan antes de reducir, así ⟨λf, *g⟩ = λ·⟨f, *g⟩ exactamente.

    Las condiciones x ⋈ c de los Piecewise parten el dominio en st(c). Si c
    no es estándar se añade la corrección de la ventana infinitesimal entre
    st(c) y c.

    Los veredictos de pertenencia a T son de refutación: ADMITTED significa
    "no refutado en el corpus".
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np

from hyperdist.config import CorpusSpec, QuadratureConfig
from hyperdist.errors import QuadratureFailure, UnsupportedForm
from hyperdist.fn_ast import (Add, Bump, Const, Cos, Exp, Expr, Mollify, Mul, Neg, Parity, Piecewise, Plateau,
                              IntPow, Recip, Sin, TestRef, breakpoint_of, eval_at, evaluate_real, expr_support,
                              has_infinite_constant, is_standard, map_tree, piecewise_breakpoints, walk)
from hyperdist.hyperreal import HyperReal, NumClass
from hyperdist.quadrature import integrate
from hyperdist.testfn import Bump as TestBump
from hyperdist.testfn import PolyMod, TestFn

logger = logging.getLogger(__name__)

MEMBERSHIP_INTERVALS: tuple[tuple[float, float], ...] = ((-1.0, 1.0), (-4.0, 4.0), (-10.0, 10.0))
SCHWARZ_SLACK: float = 1e-8
_NONLINEAR = (Sin, Cos, Exp, Bump, Plateau, TestRef, Parity, Recip)


def _one() -> HyperReal:
    return HyperReal.from_real(1.0)


class PairingStatus(Enum):
    LIMITED = "LIMITED"
    INFINITESIMAL = "INFINITESIMAL"
    UNLIMITED = "UNLIMITED"


class PairingForm(Enum):
    REGULAR = "REGULAR"
    MOLLIFIED = "MOLLIFIED"
    SUM = "SUM"


class MembershipVerdict(Enum):
    ADMITTED = "ADMITTED"
    REJECTED = "REJECTED"


def status_of(value: HyperReal) -> PairingStatus:
    """Estado de limitación de un valor (con zero_tol de su política)."""
    cls = value.classify()
    if cls is NumClass.INFINITE:
        return PairingStatus.UNLIMITED
    if cls is NumClass.APPRECIABLE:
        return PairingStatus.LIMITED
    return PairingStatus.INFINITESIMAL


@dataclass(frozen=True)
class PairingResult:
    """
    Resultado de ⟨f, *g⟩ o de una energía *∫ f².

    Args:
        value: La integral como serie en ε
        status: LIMITED, INFINITESIMAL o UNLIMITED
        quad_error: Mayor error estimado de las cuadraturas usadas
        form: Forma normal de f (REGULAR, MOLLIFIED o SUM)
    """

    value: HyperReal
    status: PairingStatus
    quad_error: float
    form: PairingForm

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value.to_json(), "status": self.status.value,
                "quad_error": self.quad_error, "form": self.form.value}


@dataclass(frozen=True)
class MembershipResult:
    """
    Veredicto de pertenencia a T.

    Args:
        verdict: ADMITTED (no refutado) o REJECTED
        witness: Función test cuyo emparejamiento no es limitado
        witness_interval: Intervalo cuya energía no converge
        energies: Estado de *∫ f² en cada intervalo comprobado
        implied_by_ii: True si todas las energías son limitadas
    """

    verdict: MembershipVerdict
    witness: Optional[TestFn] = None
    witness_interval: Optional[tuple[float, float]] = None
    energies: tuple[tuple[tuple[float, float], PairingStatus], ...] = ()
    implied_by_ii: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "witness": self.witness.to_json() if self.witness is not None else None,
            "witness_interval": list(self.witness_interval) if self.witness_interval else None,
            "energies": [{"interval": list(iv), "status": st.value} for iv, st in self.energies],
            "implied_by_ii": self.implied_by_ii,
        }


@dataclass(frozen=True)
class SchwarzReport:
    holds: bool
    lhs: float
    rhs: float
    notes: dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict[str, Any]:
        return {"holds": self.holds, "lhs": self.lhs, "rhs": self.rhs, "notes": self.notes}


# ==================== FORMA NORMAL ====================

@dataclass(frozen=True)
class NormalTerm:
    """coef · factor(x) · mollifier(x), con mollifier ausente en los términos regulares."""

    coef: HyperReal
    factor: Expr
    mollifier: Optional[Mollify] = None

    @property
    def is_regular(self) -> bool:
        return self.mollifier is None

    def scaled(self, c: HyperReal) -> "NormalTerm":
        return NormalTerm(c * self.coef, self.factor, self.mollifier)


def _is_one(f: Expr) -> bool:
    return isinstance(f, Const) and f.value == 1


def _product(a: Expr, b: Expr) -> Expr:
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Mul(a, b)


def _has_singular_mollifier(f: Expr) -> bool:
    return any(isinstance(node, Mollify) and node.is_singular for node in walk(f))


def _check_regular(f: Expr) -> None:
    for node in walk(f):
        if isinstance(node, _NONLINEAR) and has_infinite_constant(node.arg):
            logger.error(f"Primitiva no lineal con argumento de escala infinita: {node}")
            raise UnsupportedForm(f"Integrando oscilante o comprimido sin forma normal: {node}")
        if isinstance(node, Piecewise) and breakpoint_of(node) is None \
                and not (is_standard(node.lhs) and is_standard(node.rhs)):
            raise UnsupportedForm(f"Condición no estándar que no es de la forma x ⋈ c: {node}")


def _combine(a: NormalTerm, b: NormalTerm) -> NormalTerm:
    coef = a.coef * b.coef
    factor = _product(a.factor, b.factor)
    if a.mollifier is None or b.mollifier is None:
        return NormalTerm(coef, factor, a.mollifier or b.mollifier)
    ma, mb = a.mollifier, b.mollifier
    if ma.scale != mb.scale or ma.center != mb.center:
        raise UnsupportedForm("Producto de molificadores con escalas o centros distintos")
    merged = Mollify(Mul(ma.base, mb.base), ma.scale, ma.amplitude * mb.amplitude, ma.center)
    return NormalTerm(coef, factor, merged)


def normal_form(f: Expr) -> list[NormalTerm]:
    """
    Descompone f en términos REGULAR y MOLLIFIED.

    Raises:
        UnsupportedForm: Si f no admite forma normal (por ejemplo sin(Λx)
            con Λ infinito, o un molificador dentro de una primitiva no lineal)
    """
    if not _has_singular_mollifier(f):
        _check_regular(f)
        return [NormalTerm(_one(), f)]
    if isinstance(f, Mollify):
        return [NormalTerm(_one(), Const(_one()), f)]
    if isinstance(f, Add):
        return normal_form(f.left) + normal_form(f.right)
    if isinstance(f, Neg):
        return [t.scaled(-_one()) for t in normal_form(f.arg)]
    if isinstance(f, Mul):
        if isinstance(f.left, Const):
            return [t.scaled(f.left.value) for t in normal_form(f.right)]
        if isinstance(f.right, Const):
            return [t.scaled(f.right.value) for t in normal_form(f.left)]
        return [_combine(a, b) for a in normal_form(f.left) for b in normal_form(f.right)]
    if isinstance(f, IntPow):
        terms = [NormalTerm(_one(), Const(_one()))]
        base = normal_form(f.base)
        for _ in range(f.n):
            terms = [_combine(a, b) for a in terms for b in base]
        return terms
    logger.error(f"Molificador infinitesimal dentro de {type(f).__name__}")
    raise UnsupportedForm(f"Molificador infinitesimal dentro de un nodo {type(f).__name__}")


def _peel(f: Expr) -> tuple[Optional[HyperReal], Expr]:
    if isinstance(f, Mul) and isinstance(f.left, Const):
        return f.left.value, f.right
    if isinstance(f, Mul) and isinstance(f.right, Const):
        return f.right.value, f.left
    if isinstance(f, Neg):
        return -_one(), f.arg
    return None, f


def _form_of(terms: Sequence[NormalTerm]) -> PairingForm:
    kinds = {PairingForm.REGULAR if t.is_regular else PairingForm.MOLLIFIED for t in terms}
    return kinds.pop() if len(kinds) == 1 else PairingForm.SUM


# ==================== INTEGRACIÓN ====================

def _hyper_integrand(h: Expr):
    def fn(xs: np.ndarray) -> list[HyperReal]:
        return [eval_at(h, float(x)) for x in xs]
    return fn


def _integrate_pieces(fn, cuts: list[float], cfg: QuadratureConfig) -> tuple[Any, float]:
    total, error = None, 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        result = integrate(fn, a, b, cfg)
        total = result.value if total is None else total + result.value
        error = max(error, result.error)
    return total, error


def _window_correction(h: Expr, p: float, cluster: list[HyperReal], cfg: QuadratureConfig) -> tuple[HyperReal, float]:
    # ∫ sobre [p − w, p + w] de h − h_p, donde h_p lleva los cortes del cúmulo movidos a p
    w = max(abs(c - p) for c in cluster)

    def snap(node: Expr) -> Expr:
        if isinstance(node, Piecewise):
            c = breakpoint_of(node)
            if c is not None and any(c == k for k in cluster):
                moved = Const(HyperReal.from_real(p))
                return Piecewise(moved, node.op, node.rhs, node.then, node.else_) if isinstance(node.lhs, Const) \
                    else Piecewise(node.lhs, node.op, moved, node.then, node.else_)
        return node

    snapped = map_tree(h, snap, enter_mollify=False)
    cuts = sorted({-1.0, 1.0} | {((c - p) * w.recip()).coefficient(0) for c in cluster})

    def fn(vs: np.ndarray) -> list[HyperReal]:
        out = []
        for v in vs:
            y = w.scale(float(v)) + p
            out.append(eval_at(h, y) - eval_at(snapped, y))
        return out

    value, error = _integrate_pieces(fn, cuts, cfg)
    return w * value, error


def integrate_expr(h: Expr, lo: float, hi: float, cfg: QuadratureConfig) -> tuple[HyperReal, float]:
    """
    *∫_lo^hi h coeficiente a coeficiente, con cortes en los puntos de salto.

    Args:
        h: Integrando regular
        lo: Extremo inferior real
        hi: Extremo superior real
        cfg: Configuración de cuadratura

    Returns:
        (HyperReal, error estimado)
    """
    if hi <= lo:
        return HyperReal.zero(), 0.0
    limited = [c for c in piecewise_breakpoints(h) if c.is_limited()]
    cuts = sorted({lo, hi} | {c.coefficient(0) for c in limited if lo < c.coefficient(0) < hi})

    if is_standard(h):
        value, error = _integrate_pieces(lambda xs: evaluate_real(h, xs), cuts, cfg)
        return HyperReal.from_real(float(value)), error

    value, error = _integrate_pieces(_hyper_integrand(h), cuts, cfg)
    clusters: dict[float, list[HyperReal]] = {}
    for c in limited:
        if not c.is_standard():
            clusters.setdefault(c.coefficient(0), []).append(c)
    for p in sorted(clusters):
        if lo <= p <= hi:
            correction, corr_error = _window_correction(h, p, clusters[p], cfg)
            logger.debug(f"Corrección de ventana en {p}: {correction}")
            value = value + correction
            error = max(error, corr_error)
    return value, error


def _u_bound(bound: float, m: Mollify, lower: bool) -> Optional[float]:
    # Extremo del intervalo [c, d] pasado a la variable u = (x − centro)/σ
    u = (HyperReal.from_real(bound) - m.center) * m.scale.recip()
    if u.classify() is NumClass.INFINITE:
        below = u < 0
        if lower:
            return None if below else float("inf")
        return None if not below else float("-inf")
    if not u.is_standard():
        raise UnsupportedForm(f"El extremo {bound} cae dentro del molificador a distancia no estándar")
    return u.coefficient(0)


def _mollified_integral(term: NormalTerm, weight: Optional[Expr], window: Optional[tuple[float, float]],
                        cfg: QuadratureConfig) -> tuple[HyperReal, float]:
    m = term.mollifier
    base_support = expr_support(m.base)
    if base_support is None:
        raise UnsupportedForm(f"La base del molificador no tiene soporte acotado: {m.base}")
    u_lo, u_hi = base_support
    if window is not None:
        lower, upper = _u_bound(window[0], m, True), _u_bound(window[1], m, False)
        u_lo = u_lo if lower is None else max(u_lo, lower)
        u_hi = u_hi if upper is None else min(u_hi, upper)
    if u_hi <= u_lo:
        return HyperReal.zero(), 0.0

    h = term.factor if weight is None else _product(term.factor, weight)
    standard_base = is_standard(m.base)

    def fn(us: np.ndarray) -> list[HyperReal]:
        base_values = evaluate_real(m.base, us) if standard_base else [eval_at(m.base, float(u)) for u in us]
        out = []
        for u, bv in zip(us, base_values):
            if standard_base and bv == 0.0:
                out.append(HyperReal.zero())
                continue
            point = m.center + m.scale.scale(float(u))
            hv = HyperReal.from_real(1.0) if _is_one(h) else eval_at(h, point)
            out.append(hv.scale(float(bv)) if standard_base else hv * bv)
        return out

    result = integrate(fn, u_lo, u_hi, cfg)
    return term.coef * m.amplitude * m.scale * result.value, result.error


def _integrate_terms(terms: list[NormalTerm], weight: Optional[TestFn], window: tuple[float, float],
                     cfg: QuadratureConfig) -> tuple[HyperReal, float]:
    total, error = HyperReal.zero(), 0.0
    weight_expr = TestRef(weight) if weight is not None else None
    for term in terms:
        if term.is_regular:
            h = term.factor if weight_expr is None else _product(term.factor, weight_expr)
            lo, hi = window
            support = expr_support(h)
            if support is not None:
                lo, hi = max(lo, support[0]), min(hi, support[1])
            value, err = integrate_expr(h, lo, hi, cfg)
            value = term.coef * value
        else:
            value, err = _mollified_integral(term, weight_expr, None if weight is not None else window, cfg)
        total = total + value
        error = max(error, err)
    return total, error


# ==================== OPERACIONES ====================

def pair(f: Expr, g: TestFn, cfg: Optional[QuadratureConfig] = None) -> PairingResult:
    """
    Calcula ⟨f, *g⟩ como serie en ε.

    Args:
        f: Función interna
        g: Función test
        cfg: Configuración de cuadratura

    Returns:
        PairingResult: valor, estado de limitación, error y forma

    Raises:
        UnsupportedForm: Si f no tiene forma normal soportada
        QuadratureFailure: Si no se alcanza la tolerancia
    """
    cfg = cfg or QuadratureConfig()
    scalar, core = _peel(f)
    if scalar is not None:
        inner = pair(core, g, cfg)
        value = scalar * inner.value
        return PairingResult(value, status_of(value), inner.quad_error, inner.form)

    terms = normal_form(f)
    support = g.support()
    value, error = _integrate_terms(terms, g, (support.lo, support.hi), cfg)
    result = PairingResult(value, status_of(value), error, _form_of(terms))
    logger.info(f"⟨{f}, {g}⟩ = {value} ({result.status.value})")
    return result


def energy(f: Expr, c: float, d: float, cfg: Optional[QuadratureConfig] = None) -> PairingResult:
    """
    Calcula *∫_c^d f² como serie en ε.

    Raises:
        ValueError: Si c > d
        UnsupportedForm: Si f² no tiene forma normal soportada
        QuadratureFailure: Si no se alcanza la tolerancia
    """
    if c > d:
        raise ValueError(f"Intervalo de energía inválido: [{c}, {d}]")
    cfg = cfg or QuadratureConfig()
    scalar, core = _peel(f)
    if scalar is not None:
        inner = energy(core, c, d, cfg)
        value = (scalar * scalar) * inner.value
        return PairingResult(value, status_of(value), inner.quad_error, inner.form)

    terms = normal_form(Mul(core, core))
    value, error = _integrate_terms(terms, None, (c, d), cfg)
    result = PairingResult(value, status_of(value), error, _form_of(terms))
    logger.info(f"∫_{c}^{d} ({f})² = {value} ({result.status.value})")
    return result


def member_T(f: Expr, corpus: Sequence[TestFn], cfg: Optional[QuadratureConfig] = None) -> MembershipResult:
    """
    Decide (por refutación) si f pertenece a T.

    La propiedad (ii) se comprueba como "la energía es un hiperreal" en
    [−1,1], [−4,4] y [−10,10]; su limitación se anota aparte. La (iii)
    exige ⟨f, *g⟩ limitado para cada g del corpus.

    Args:
        f: Función interna
        corpus: Funciones test (no vacío)
        cfg: Configuración de cuadratura

    Returns:
        MembershipResult: ADMITTED o REJECTED con testigo

    Raises:
        ValueError: Si el corpus está vacío
    """
    if not corpus:
        raise ValueError("El corpus de funciones test no puede estar vacío")
    cfg = cfg or QuadratureConfig()
    energies: list[tuple[tuple[float, float], PairingStatus]] = []
    for c, d in MEMBERSHIP_INTERVALS:
        try:
            result = energy(f, c, d, cfg)
        except QuadratureFailure as e:
            logger.warning(f"Energía de {f} en [{c}, {d}] no converge: {e}")
            return MembershipResult(MembershipVerdict.REJECTED, witness_interval=(c, d), energies=tuple(energies))
        energies.append(((c, d), result.status))

    limited_ii = all(status is not PairingStatus.UNLIMITED for _, status in energies)
    for g in corpus:
        result = pair(f, g, cfg)
        if result.status is PairingStatus.UNLIMITED:
            logger.info(f"{f} rechazada: ⟨f, *g⟩ no limitado para g = {g}")
            return MembershipResult(MembershipVerdict.REJECTED, witness=g, energies=tuple(energies),
                                    implied_by_ii=limited_ii)
    logger.info(f"{f} admitida (no refutada en {len(corpus)} funciones test)")
    return MembershipResult(MembershipVerdict.ADMITTED, energies=tuple(energies), implied_by_ii=limited_ii)


def schwarz_check(f: Expr, g: TestFn, cfg: Optional[QuadratureConfig] = None) -> SchwarzReport:
    """
    Comprueba st⟨f,*g⟩² ≤ st(∫f²)·st(∫g²) sobre el soporte de g.

    Returns:
        SchwarzReport: evaluable como booleano; False con notas si algún
            lado no es limitado o la desigualdad falla
    """
    cfg = cfg or QuadratureConfig()
    support = g.support()
    paired = pair(f, g, cfg)
    f_energy = energy(f, support.lo, support.hi, cfg)
    g_energy = pair(TestRef(g), g, cfg)
    unlimited = [name for name, r in (("pair", paired), ("energy_f", f_energy), ("energy_g", g_energy))
                 if r.status is PairingStatus.UNLIMITED]
    if unlimited:
        logger.warning(f"Schwarz con lados no limitados: {unlimited}")
        return SchwarzReport(False, float("nan"), float("nan"), {"unlimited": unlimited})
    lhs = paired.value.standard_part() ** 2
    rhs = f_energy.value.standard_part() * g_energy.value.standard_part()
    holds = lhs <= rhs + SCHWARZ_SLACK
    if not holds:
        logger.warning(f"Desigualdad de Schwarz violada: {lhs} > {rhs}")
    return SchwarzReport(holds, lhs, rhs)


def default_corpus(spec: Optional[CorpusSpec] = None) -> list[TestFn]:
    """
    Corpus por defecto: bumps en cada centro y semiancho, más bumps
    centrados multiplicados por monomios t^k.
    """
    spec = spec or CorpusSpec()
    corpus: list[TestFn] = [TestBump(c, h) for c in spec.centers for h in spec.halfwidths]
    for k in spec.monomial_degrees:
        monomial = tuple([0.0] * k + [1.0])
        corpus.extend(PolyMod(monomial, TestBump(0.0, h)) for h in spec.monomial_halfwidths)
    return corpus
