"""
Aritmética de Taylor truncada (modo Taylor)

Descripción:
    Un Jet guarda los coeficientes normalizados c_k = f^(k)(x)/k! de un
    polinomio de Taylor truncado, vectorizado sobre un array de puntos:
    coeffs tiene forma (orden + 1, n_puntos). Las operaciones propagan los
    coeficientes con las recurrencias clásicas (producto de Cauchy,
    recíproco, exponencial, seno/coseno), sin árboles simbólicos.

    Se usa para las derivadas de las funciones test y para los datos de
    Taylor de las primitivas no analíticas (bump, meseta).
"""

import math
from functools import lru_cache

import numpy as np

from hyperdist.quadrature import gauss_kronrod_fixed


class Jet:
    """
    Polinomio de Taylor truncado, vectorizado sobre puntos.

    Args:
        coeffs: Array (orden + 1, n) con los coeficientes normalizados
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: np.ndarray) -> None:
        self.coeffs: np.ndarray = np.asarray(coeffs, dtype=float)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @classmethod
    def variable(cls, x: np.ndarray, order: int) -> "Jet":
        """Jet de la identidad en los puntos x: x + 1·h."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        coeffs = np.zeros((order + 1, x.size))
        coeffs[0] = x
        if order >= 1:
            coeffs[1] = 1.0
        return cls(coeffs)

    @classmethod
    def constant(cls, value: np.ndarray | float, order: int, size: int) -> "Jet":
        coeffs = np.zeros((order + 1, size))
        coeffs[0] = value
        return cls(coeffs)

    def __add__(self, other: "Jet | float") -> "Jet":
        if isinstance(other, Jet):
            return Jet(self.coeffs + other.coeffs)
        out = self.coeffs.copy()
        out[0] += other
        return Jet(out)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs)

    def __sub__(self, other: "Jet | float") -> "Jet":
        return self + (-other)

    def __rsub__(self, other: float) -> "Jet":
        return (-self) + other

    def __mul__(self, other: "Jet | float | np.ndarray") -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.coeffs * other)
        a, b = self.coeffs, other.coeffs
        out = np.zeros_like(a)
        for k in range(a.shape[0]):
            out[k] = np.sum(a[:k + 1] * b[k::-1], axis=0)
        return Jet(out)

    __rmul__ = __mul__

    def recip(self) -> "Jet":
        a = self.coeffs
        out = np.zeros_like(a)
        out[0] = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            out[k] = -out[0] * np.sum(a[1:k + 1] * out[k - 1::-1], axis=0)
        return Jet(out)

    def exp(self) -> "Jet":
        a = self.coeffs
        out = np.zeros_like(a)
        out[0] = np.exp(a[0])
        for k in range(1, a.shape[0]):
            i = np.arange(1, k + 1).reshape(-1, *([1] * (a.ndim - 1)))
            out[k] = np.sum(i * a[1:k + 1] * out[k - 1::-1], axis=0) / k
        return Jet(out)

    def sin_cos(self) -> tuple["Jet", "Jet"]:
        a = self.coeffs
        s = np.zeros_like(a)
        c = np.zeros_like(a)
        s[0] = np.sin(a[0])
        c[0] = np.cos(a[0])
        for k in range(1, a.shape[0]):
            i = np.arange(1, k + 1).reshape(-1, *([1] * (a.ndim - 1)))
            s[k] = np.sum(i * a[1:k + 1] * c[k - 1::-1], axis=0) / k
            c[k] = -np.sum(i * a[1:k + 1] * s[k - 1::-1], axis=0) / k
        return Jet(s), Jet(c)

    def rescale(self, factor: float) -> "Jet":
        """Regla de la cadena para un cambio lineal h ↦ factor·h."""
        powers = factor ** np.arange(self.coeffs.shape[0])
        return Jet(self.coeffs * powers.reshape(-1, *([1] * (self.coeffs.ndim - 1))))

    def derivatives(self) -> np.ndarray:
        """Derivadas f^(k) = k!·c_k."""
        fact = np.array([math.factorial(k) for k in range(self.coeffs.shape[0])], dtype=float)
        return self.coeffs * fact.reshape(-1, *([1] * (self.coeffs.ndim - 1)))


# ==================== PRIMITIVAS NO ANALÍTICAS ====================

def bump_jets(t: np.ndarray, order: int) -> np.ndarray:
    """
    Coeficientes de Taylor de b(t) = exp(−1/(1−t²)) en cada punto t.

    Fuera de |t| < 1 todos los coeficientes son cero (b es plana en ±1).

    Args:
        t: Puntos de evaluación
        order: Orden máximo

    Returns:
        np.ndarray: Array (order + 1, len(t))
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((order + 1, t.size))
    inside = np.abs(t) < 1.0
    if np.any(inside):
        var = Jet.variable(t[inside], order)
        u = 1.0 - var * var
        out[:, inside] = (-u.recip()).exp().coeffs
    return out


def bump_values(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


TABLE_SIZE: int = 512


@lru_cache(maxsize=1)
def _smoothstep_table() -> tuple[np.ndarray, np.ndarray, float]:
    # S(t) = ∫_{-1}^t b / I_b en una malla fija, acumulando GK15 por celda
    nodes = np.linspace(-1.0, 1.0, TABLE_SIZE + 1)
    cells = np.array([gauss_kronrod_fixed(bump_values, lo, hi) for lo, hi in zip(nodes[:-1], nodes[1:])])
    cumulative = np.concatenate(([0.0], np.cumsum(cells)))
    total = float(cumulative[-1])
    return nodes, cumulative / total, total


def bump_integral() -> float:
    """I_b = ∫_{-1}^{1} b(u) du."""
    return _smoothstep_table()[2]


def smoothstep_values(t: np.ndarray) -> np.ndarray:
    """
    Escalón suave S(t) = ∫_{-1}^{t} b / I_b, con S = 0 en t ≤ −1 y 1 en t ≥ 1.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    nodes, table, total = _smoothstep_table()
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = np.abs(t) < 1.0
    if np.any(inside):
        ti = t[inside]
        idx = np.clip(np.searchsorted(nodes, ti, side="right") - 1, 0, TABLE_SIZE - 1)
        partial = np.array([gauss_kronrod_fixed(bump_values, nodes[i], x) for i, x in zip(idx, ti)])
        out[inside] = table[idx] + partial / total
    return out


def smoothstep_jets(t: np.ndarray, order: int) -> np.ndarray:
    """
    Coeficientes de Taylor de S en t: S(t+h) = S(t) + Σ b_k h^{k+1}/((k+1)·I_b).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((order + 1, t.size))
    out[0] = smoothstep_values(t)
    if order >= 1:
        b = bump_jets(t, order - 1)
        k = np.arange(1, order + 1).reshape(-1, 1)
        out[1:] = b / (k * bump_integral())
    return out


def plateau_jets(x: np.ndarray, inner: float, outer: float, order: int) -> np.ndarray:
    """
    Coeficientes de Taylor de la meseta suave: 1 en |x| ≤ inner, 0 en |x| ≥ outer.

    En la transición H(y) = 1 − S(2(y − inner)/(outer − inner) − 1) con y = |x|;
    para x < 0 se usa la paridad H(|x| − h).

    Args:
        x: Puntos
        inner: Radio interior (> 0 o 0)
        outer: Radio exterior (> inner)
        order: Orden máximo
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((order + 1, x.size))
    y = np.abs(x)
    out[0, y <= inner] = 1.0
    band = (y > inner) & (y < outer)
    if np.any(band):
        slope = 2.0 / (outer - inner)
        t = slope * (y[band] - inner) - 1.0
        jets = -smoothstep_jets(t, order)
        jets[0] += 1.0
        jets = Jet(jets).rescale(slope).coeffs
        sign = np.where(x[band] < 0, -1.0, 1.0)
        powers = sign[np.newaxis, :] ** np.arange(order + 1).reshape(-1, 1)
        out[:, band] = jets * powers
    return out


def plateau_values(x: np.ndarray, inner: float, outer: float) -> np.ndarray:
    return plateau_jets(x, inner, outer, 0)[0]
