"""
Galería de funciones internas de referencia

Constructores con nombre para las funciones que sirven de ejemplo y de
caso de prueba: la constante ε, el seno desplazado, el molificador de Dirac,
el bump escalado por un infinito, el seno de frecuencia infinita, el escalón
de salto infinitesimal y el indicador comprimido.
"""

from typing import Optional, Union

from hyperdist.fn_ast import Bump, Const, Expr, Mul, Piecewise, Sin, Var, make_dirac
from hyperdist.hyperreal import HyperReal

Scalar = Union[HyperReal, int, float]


def _infinite_default(lam: Optional[Scalar]) -> HyperReal:
    return HyperReal.epsilon(-1) if lam is None else HyperReal.coerce(lam)


def epsilon_constant() -> Expr:
    """f(x) = ε."""
    return Const(HyperReal.epsilon())


def shifted_sine() -> Expr:
    """f(x) = sin(x + ε)."""
    return Sin(Var() + HyperReal.epsilon())


def dirac() -> Expr:
    return make_dirac()


def scaled_bump(lam: Optional[Scalar] = None) -> Expr:
    """f(x) = Λ·b(x), por defecto Λ = 1/ε."""
    return Mul(Const(_infinite_default(lam)), Bump())


def fast_sine(lam: Optional[Scalar] = None) -> Expr:
    """f(x) = sin(Λx), por defecto Λ = 1/ε."""
    return Sin(Mul(Const(_infinite_default(lam)), Var()))


def small_step(a: Scalar = 0.0, b: Scalar = 0.0, jump: Optional[Scalar] = None) -> Expr:
    """
    Escalón con salto infinitesimal en b.

    Args:
        a: Valor a la derecha (x ≥ b)
        b: Punto de salto
        jump: Salto (por defecto ε); a la izquierda vale a + jump

    Returns:
        Expr: where(x < b, a + jump, a)
    """
    a_value = HyperReal.coerce(a)
    jump_value = HyperReal.epsilon() if jump is None else HyperReal.coerce(jump)
    return Piecewise(Var(), "<", Const(HyperReal.coerce(b)), Const(a_value + jump_value), Const(a_value))


def compressed_indicator() -> Expr:
    """
    k(x) = 1 en [−ε, 0) ∪ (0, ε] y 0 en el resto.
    """
    eps = HyperReal.epsilon()
    zero, one = Const(HyperReal.zero()), Const(HyperReal.from_real(1.0))
    inner = Piecewise(Var(), "<", zero, one, Piecewise(Var(), ">", zero, one, zero))
    return Piecewise(Var(), "<", Const(-eps), zero,
                     Piecewise(Var(), ">", Const(eps), zero, inner))
