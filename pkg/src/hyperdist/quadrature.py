"""
Cuadratura adaptativa determinista

Descripción:
    Integración adaptativa con la regla de Gauss-Kronrod de 15 puntos
    (tabla de nodos de QUADPACK) o con Simpson adaptativo. El integrando se
    evalúa por lotes: recibe un array de nodos y devuelve

      - un array de forma (n,) para integrandos escalares,
      - un array de forma (n, m) para integrandos vectoriales,
      - una lista de n HyperReal para integrandos con valores en series
        (se integran coeficiente a coeficiente).

    Se bisecta siempre el intervalo con mayor error (desempate por el extremo
    izquierdo) y la suma final recorre los intervalos de izquierda a derecha,
    así que entradas idénticas producen resultados idénticos bit a bit.
"""

import heapq
import logging
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from hyperdist.config import QuadratureConfig
from hyperdist.errors import QuadratureFailure

logger = logging.getLogger(__name__)

# Nodos y pesos de Kronrod (15 puntos) y de Gauss (7 puntos) en [-1, 1]
_XGK: np.ndarray = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK: np.ndarray = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG: np.ndarray = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES: np.ndarray = np.concatenate((-_XGK[:-1], _XGK[::-1]))
GK_WEIGHTS: np.ndarray = np.concatenate((_WGK[:-1], _WGK[::-1]))
# Pesos de Gauss sobre los mismos 15 nodos (cero en los nodos solo-Kronrod)
G_WEIGHTS: np.ndarray = np.zeros(15)
G_WEIGHTS[[1, 3, 5]] = _WG[:3]
G_WEIGHTS[7] = _WG[3]
G_WEIGHTS[[9, 11, 13]] = _WG[2::-1]

_EPS: float = np.finfo(float).eps

Integrand = Callable[[np.ndarray], Any]


@dataclass(frozen=True)
class QuadratureResult:
    """
    Resultado de una integración.

    Args:
        value: Integral (float, array o HyperReal según el integrando)
        error: Estimación del error absoluto (norma máxima por coeficiente)
        intervals: Número de subintervalos usados
    """

    value: Any
    error: float
    intervals: int


# ==================== ÁLGEBRA SOBRE VALORES ====================

def _weighted_sum(weights: np.ndarray, values: Any) -> Any:
    if isinstance(values, np.ndarray):
        return np.tensordot(weights, values, axes=1)
    total = None
    for w, v in zip(weights, values):
        if w == 0.0:
            continue
        term = v.scale(float(w))
        total = term if total is None else total + term
    return total


def _norm(value: Any) -> float:
    if isinstance(value, np.ndarray):
        return float(np.max(np.abs(value))) if value.size else 0.0
    if isinstance(value, float):
        return abs(value)
    return max((abs(c) for _, c in value.terms), default=0.0)


def _scaled(value: Any, factor: float) -> Any:
    if isinstance(value, np.ndarray):
        return value * factor
    return value.scale(factor)


def _sum_values(values: list[Any]) -> Any:
    total = values[0]
    for v in values[1:]:
        total = total + v
    return total


# ==================== REGLAS ====================

def _gk15(fn: Integrand, a: float, b: float) -> tuple[Any, float]:
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = fn(center + half * GK_NODES)
    kronrod = _weighted_sum(GK_WEIGHTS * half, fx)
    gauss = _weighted_sum(G_WEIGHTS * half, fx)
    error = _norm(kronrod - gauss)
    # por debajo del ruido de redondeo no tiene sentido seguir bisecando
    if error <= 50 * _EPS * _norm(kronrod):
        error = 0.0
    return kronrod, error


def _simpson(fn: Integrand, a: float, b: float) -> tuple[Any, float]:
    xs = np.linspace(a, b, 5)
    fx = fn(xs)
    h = b - a
    coarse = _weighted_sum(np.array([1.0, 0.0, 4.0, 0.0, 1.0]) * (h / 6.0), fx)
    fine = _weighted_sum(np.array([1.0, 4.0, 2.0, 4.0, 1.0]) * (h / 12.0), fx)
    diff = fine - coarse
    # extrapolación de Richardson
    value = fine + _scaled(diff, 1.0 / 15.0)
    error = _norm(diff) / 15.0
    if error <= 50 * _EPS * _norm(fine):
        error = 0.0
    return value, error


_RULES: dict[str, Callable[[Integrand, float, float], tuple[Any, float]]] = {
    "gauss-kronrod-15": _gk15,
    "adaptive-simpson": _simpson,
}


def gauss_kronrod_fixed(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    """
    Una sola aplicación de la regla de Kronrod de 15 puntos en [a, b].

    Args:
        fn: Integrando escalar vectorizado
        a: Extremo inferior
        b: Extremo superior

    Returns:
        float: Aproximación de Kronrod
    """
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return float(half * np.dot(GK_WEIGHTS, fn(center + half * GK_NODES)))


# ==================== DRIVER ADAPTATIVO ====================

def integrate(fn: Integrand, a: float, b: float, cfg: QuadratureConfig) -> QuadratureResult:
    """
    Integra fn en [a, b] de forma adaptativa.

    Args:
        fn: Integrando por lotes (ver descripción del módulo)
        a: Extremo inferior
        b: Extremo superior (a ≤ b)
        cfg: Tolerancia, máximo de subdivisiones y regla

    Returns:
        QuadratureResult: valor, error estimado e intervalos usados

    Raises:
        QuadratureFailure: Si no se alcanza abs_tol en max_subdivisions intervalos
        ValueError: Si a > b
    """
    if a > b:
        raise ValueError(f"Intervalo de integración invertido: [{a}, {b}]")
    rule = _RULES[cfg.rule]
    if a == b:
        value, _ = rule(fn, a, a)
        return QuadratureResult(value - value, 0.0, 0)

    value, error = rule(fn, a, b)
    # heap de (-error, a, b, id): el peor intervalo sale primero, desempate por a
    heap: list[tuple[float, float, float, int]] = [(-error, a, b, 0)]
    values: dict[int, Any] = {0: value}
    errors: dict[int, float] = {0: error}
    done: list[tuple[float, float, float, int]] = []
    next_id: int = 1

    while heap and sum(errors.values()) > cfg.abs_tol and len(values) < cfg.max_subdivisions:
        item = heapq.heappop(heap)
        _, lo, hi, ident = item
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            logger.warning(f"Intervalo [{lo}, {hi}] ya no se puede bisecar")
            done.append(item)
            continue
        del values[ident]
        del errors[ident]
        for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
            sub_value, sub_error = rule(fn, sub_lo, sub_hi)
            values[next_id] = sub_value
            errors[next_id] = sub_error
            heapq.heappush(heap, (-sub_error, sub_lo, sub_hi, next_id))
            next_id += 1

    total_error = sum(errors.values())
    if total_error > cfg.abs_tol:
        logger.error(f"Cuadratura sin converger en [{a}, {b}]: error={total_error:.3e}, "
                     f"intervalos={len(values)}")
        raise QuadratureFailure(
            f"No se alcanzó la tolerancia {cfg.abs_tol:g} en [{a}, {b}]",
            error=total_error, intervals=len(values))

    ordered = sorted(heap + done, key=lambda entry: entry[1])
    total = _sum_values([values[entry[3]] for entry in ordered])
    logger.debug(f"Cuadratura en [{a}, {b}]: {len(values)} intervalos, error={total_error:.3e}")
    return QuadratureResult(total, total_error, len(values))


def integrate_scalar(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     cfg: QuadratureConfig) -> QuadratureResult:
    """Atajo para integrandos escalares; el valor se devuelve como float."""
    result = integrate(fn, a, b, cfg)
    return QuadratureResult(float(result.value), result.error, result.intervals)
