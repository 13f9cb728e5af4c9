"""
Ajuste de funcionales por polinomios de Legendre

Descripción:
    Dadas funciones test g_1..g_m linealmente independientes y valores
    a_1..a_m, construye un polinomio p con ∫p·g_j = a_j:

      1. Desarrolla cada g_j en la base P_n(x/c) de [−c, c]:
         B[j][n] = (1/r_n)·∫ g_j·P_n, con r_n = 2c/(2n+1).
      2. Elige m columnas por eliminación con pivote umbral.
      3. Resuelve A·b = a y toma c_l = b_l / r_{j_l}, de modo que
         p = Σ c_l·P_{j_l} cumple ∫p·g_j = Σ_l b_l·B[j][j_l] = a_j.

    Los residuos se verifican emparejando el polinomio devuelto con cada g_j,
    de modo que la pérdida de precisión al pasar a monomios no pasa inadvertida.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.linalg import lu_factor, lu_solve

from hyperdist.config import DEFAULT_CONFIG, HyperDistConfig
from hyperdist.errors import IndependenceError, QuadratureFailure, SupportViolation
from hyperdist.fn_ast import Const, Expr, IntPow, Mul, Var
from hyperdist.hyperreal import HyperReal
from hyperdist.pairing import pair
from hyperdist.quadrature import integrate
from hyperdist.testfn import Bump, TestFn

logger = logging.getLogger(__name__)


def legendre_table(t: np.ndarray, N: int) -> np.ndarray:
    """
    P_0..P_{N−1} en los puntos t por la recurrencia de tres términos.

    Returns:
        np.ndarray: Array (N, len(t))
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    table = np.zeros((N, t.size))
    table[0] = 1.0
    if N > 1:
        table[1] = t
    for n in range(1, N - 1):
        table[n + 1] = ((2 * n + 1) * t * table[n] - n * table[n - 1]) / (n + 1)
    return table


@dataclass(frozen=True)
class LegendreBasis:
    """Base P_n(x/c), n < N, ortogonal en [−c, c]."""

    c: float
    N: int

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError(f"El semiancho c debe ser positivo: {self.c}")
        if self.N < 1:
            raise ValueError(f"N debe ser >= 1: {self.N}")

    @property
    def norms(self) -> np.ndarray:
        """r_n = ∫ P_n(x/c)² dx = 2c/(2n+1)."""
        return 2.0 * self.c / (2.0 * np.arange(self.N) + 1.0)

    def values(self, x: np.ndarray) -> np.ndarray:
        return legendre_table(np.asarray(x, dtype=float) / self.c, self.N)

    def evaluate(self, coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Σ coefficients[n]·P_n(x/c)."""
        return np.asarray(coefficients, dtype=float) @ self.values(x)

    def monomial_coefficients(self, coefficients: np.ndarray) -> np.ndarray:
        """Coeficientes en potencias de x (no de x/c), de grado menor a mayor."""
        coefficients = np.trim_zeros(np.asarray(coefficients, dtype=float), "b")
        if coefficients.size == 0:
            return np.zeros(1)
        in_t = npleg.leg2poly(coefficients)
        return in_t / self.c ** np.arange(in_t.size)


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """
    Coeficientes de Legendre de las funciones test.

    Args:
        basis: Base usada
        B: Matriz m×N, B[j][n] = a_n^j
        selected_columns: Columnas elegidas, en orden creciente
        A: Submatriz m×m de las columnas elegidas
        condition: Número de condición de A
    """

    basis: LegendreBasis
    B: np.ndarray
    selected_columns: tuple[int, ...] = ()
    A: Optional[np.ndarray] = None
    condition: float = float("nan")

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.basis.c, "N": self.basis.N, "B": self.B.tolist(),
                "selected_columns": list(self.selected_columns),
                "A": self.A.tolist() if self.A is not None else None, "condition": self.condition}


@dataclass(frozen=True, eq=False)
class MatchResult:
    """
    Polinomio que reproduce los valores pedidos.

    Args:
        basis: Base de Legendre
        selected_columns: Índices j_l usados
        coefficients: c_l sobre las columnas elegidas
        legendre_coefficients: Vector completo de longitud N
        polynomial: El polinomio como árbol en x (None en la solución de norma mínima)
        residuals: |∫p·g_j − a_j| por cada j
    """

    basis: LegendreBasis
    selected_columns: tuple[int, ...]
    coefficients: tuple[float, ...]
    legendre_coefficients: np.ndarray
    polynomial: Optional[Expr]
    residuals: tuple[float, ...]
    functional_values: tuple[float, ...] = field(default=())

    @property
    def monomial_coefficients(self) -> np.ndarray:
        return self.basis.monomial_coefficients(self.legendre_coefficients)

    def to_dict(self) -> dict[str, Any]:
        return {
            "c": self.basis.c,
            "N": self.basis.N,
            "selected_columns": list(self.selected_columns),
            "legendre": {str(j): c for j, c in zip(self.selected_columns, self.coefficients)},
            "monomial": self.monomial_coefficients.tolist(),
            "polynomial": self.polynomial.to_json() if self.polynomial is not None else None,
            "functional_values": list(self.functional_values),
            "residuals": list(self.residuals),
        }


# ==================== OPERACIONES ====================

def _config(cfg: Optional[HyperDistConfig]) -> HyperDistConfig:
    return cfg or DEFAULT_CONFIG


def expand(g_list: Sequence[TestFn], N: Optional[int] = None, cfg: Optional[HyperDistConfig] = None,
           c: Optional[float] = None) -> CoefficientMatrix:
    """
    Coeficientes de Legendre de cada g_j.

    Args:
        g_list: Funciones test (no vacía, m ≤ N)
        N: Tamaño de la base (por defecto cfg.match.N)
        cfg: Configuración
        c: Semiancho de la base (por defecto support_margin × el soporte común)

    Returns:
        CoefficientMatrix: con B calculada y sin columnas elegidas

    Raises:
        SupportViolation: Si algún soporte no cabe en (−c, c)
        IndependenceError: Si m > N
    """
    cfg = _config(cfg)
    N = N or cfg.match.N
    if not g_list:
        raise ValueError("La lista de funciones test está vacía")
    if len(g_list) > N:
        raise IndependenceError(f"{len(g_list)} funciones no pueden ser independientes en una base de {N}")
    supports = [g.support() for g in g_list]
    if c is None:
        c = cfg.match.support_margin * max(max(abs(s.lo), abs(s.hi)) for s in supports)
    for g, s in zip(g_list, supports):
        if not (-c < s.lo and s.hi < c):
            logger.error(f"El soporte de {g} no cabe en (−{c}, {c})")
            raise SupportViolation(f"El soporte [{s.lo}, {s.hi}] de {g} no cabe en (−{c}, {c})",
                                   support=s.to_json(), c=c)
    basis = LegendreBasis(float(c), N)
    rows = []
    for g, s in zip(g_list, supports):
        result = integrate(lambda xs, g=g: (basis.values(xs) * g.values(xs)).T, s.lo, s.hi, cfg.quad)
        rows.append(np.asarray(result.value) / basis.norms)
    logger.debug(f"Desarrollo de Legendre: m={len(g_list)}, N={N}, c={c}")
    return CoefficientMatrix(basis, np.vstack(rows))


def select_columns(matrix: CoefficientMatrix, cfg: Optional[HyperDistConfig] = None) -> CoefficientMatrix:
    """
    Elige m columnas con eliminación por filas y pivote umbral.

    En cada fila son admisibles las columnas libres con
    |w| ≥ max(cond_tol, pivot_threshold · max|w|); se toma la de menor índice.

    Raises:
        IndependenceError: Si una fila queda sin columnas admisibles
    """
    cfg = _config(cfg)
    work = np.array(matrix.B, dtype=float)
    m, N = work.shape
    selected: list[int] = []
    for i in range(m):
        free = [j for j in range(N) if j not in selected]
        peak = max(abs(work[i, j]) for j in free)
        if peak < cfg.match.cond_tol:
            logger.error(f"Fila {i} sin pivote admisible (máximo {peak:.3e})")
            raise IndependenceError(f"Las funciones test no son linealmente independientes (fila {i})", row=i)
        threshold = max(cfg.match.cond_tol, cfg.match.pivot_threshold * peak)
        j = next(j for j in free if abs(work[i, j]) >= threshold)
        selected.append(j)
        for r in range(i + 1, m):
            work[r] -= (work[r, j] / work[i, j]) * work[i]
    columns = tuple(sorted(selected))
    A = matrix.B[:, list(columns)]
    condition = float(np.linalg.cond(A))
    logger.debug(f"Columnas elegidas {columns}, condición {condition:.3e}")
    return CoefficientMatrix(matrix.basis, matrix.B, columns, A, condition)


def polynomial_expr(monomials: np.ndarray) -> Expr:
    """Σ m_k·x^k como árbol (Const(0) si todos son cero)."""
    expr: Optional[Expr] = None
    for k, coef in enumerate(monomials):
        if coef == 0.0:
            continue
        term: Expr = Const(HyperReal.from_real(float(coef)))
        if k == 1:
            term = Mul(term, Var())
        elif k > 1:
            term = Mul(term, IntPow(Var(), k))
        expr = term if expr is None else expr + term
    return expr if expr is not None else Const(HyperReal.zero())


def functional_values(basis: LegendreBasis, coefficients: np.ndarray, g_list: Sequence[TestFn],
                      cfg: Optional[HyperDistConfig] = None) -> np.ndarray:
    """∫p·g_j para p = Σ coefficients[n]·P_n(x/c), por cuadratura."""
    cfg = _config(cfg)
    out = []
    for g in g_list:
        s = g.support()
        result = integrate(lambda xs, g=g: basis.evaluate(coefficients, xs) * g.values(xs), s.lo, s.hi, cfg.quad)
        out.append(float(result.value))
    return np.array(out)


def _solve(A: np.ndarray, targets: np.ndarray) -> np.ndarray:
    if not np.any(targets):
        return np.zeros_like(targets)
    return lu_solve(lu_factor(A), targets)


def _check_targets(g_list: Sequence[TestFn], targets: Sequence[float]) -> np.ndarray:
    a = np.asarray(targets, dtype=float)
    if a.shape != (len(g_list),):
        raise ValueError(f"Se esperaban {len(g_list)} valores, no {a.size}")
    return a


def match(g_list: Sequence[TestFn], targets: Sequence[float], N: Optional[int] = None,
          cfg: Optional[HyperDistConfig] = None, c: Optional[float] = None) -> MatchResult:
    """
    Construye p con ∫p·g_j = a_j.

    Args:
        g_list: Funciones test linealmente independientes
        targets: Valores a_j
        N: Tamaño de la base
        cfg: Configuración
        c: Semiancho de la base

    Returns:
        MatchResult: polinomio, coeficientes y residuos

    Raises:
        IndependenceError: Si las funciones no son independientes
        QuadratureFailure: Si algún residuo supera match_tol
    """
    cfg = _config(cfg)
    a = _check_targets(g_list, targets)
    matrix = select_columns(expand(g_list, N, cfg, c), cfg)
    b = _solve(matrix.A, a)
    columns = matrix.selected_columns
    basis = matrix.basis
    coefficients = b / basis.norms[list(columns)]
    full = np.zeros(basis.N)
    full[list(columns)] = coefficients

    polynomial = polynomial_expr(basis.monomial_coefficients(full))
    values = np.array([pair(polynomial, g, cfg.quad).value.standard_part() for g in g_list])
    residuals = np.abs(values - a)
    if np.any(residuals > cfg.match.match_tol):
        logger.error(f"Residuos por encima de {cfg.match.match_tol}: {residuals}")
        raise QuadratureFailure(f"El ajuste no alcanza la tolerancia {cfg.match.match_tol}",
                                residuals=residuals.tolist())
    logger.info(f"Ajuste de Legendre: columnas {columns}, residuo máximo {residuals.max():.3e}")
    return MatchResult(basis, columns, tuple(float(v) for v in coefficients), full, polynomial,
                       tuple(float(r) for r in residuals), tuple(float(v) for v in values))


def brute_force_oracle(g_list: Sequence[TestFn], targets: Sequence[float], N: Optional[int] = None,
                       cfg: Optional[HyperDistConfig] = None, c: Optional[float] = None) -> MatchResult:
    """
    Solución de norma mínima sobre todas las columnas: M·x = a con
    M[j][n] = ∫g_j·P_n, resuelta por las ecuaciones normales M·Mᵀ·y = a, x = Mᵀ·y.

    Raises:
        IndependenceError: Con el mismo criterio de rango que match
    """
    cfg = _config(cfg)
    a = _check_targets(g_list, targets)
    matrix = select_columns(expand(g_list, N, cfg, c), cfg)
    basis = matrix.basis
    M = matrix.B * basis.norms
    x = M.T @ _solve(M @ M.T, a)
    values = functional_values(basis, x, g_list, cfg)
    columns = tuple(int(j) for j in np.flatnonzero(x))
    return MatchResult(basis, columns, tuple(float(x[j]) for j in columns), x, None,
                       tuple(float(r) for r in np.abs(values - a)), tuple(float(v) for v in values))


def random_instance(m: int, rng: np.random.Generator) -> tuple[list[TestFn], np.ndarray]:
    """
    Instancia aleatoria reproducible: m bumps con centro en [−1, 1] y
    semiancho en [0.3, 1], y valores uniformes en [−1, 1].
    """
    if m < 1:
        raise ValueError(f"m debe ser >= 1: {m}")
    centers = rng.uniform(-1.0, 1.0, size=m)
    halfwidths = rng.uniform(0.3, 1.0, size=m)
    g_list: list[TestFn] = [Bump(float(c), float(h)) for c, h in zip(centers, halfwidths)]
    return g_list, rng.uniform(-1.0, 1.0, size=m)
