"""
Errores del motor hyperdist

Descripción:
    Jerarquía única de excepciones de dominio. Cada clase lleva un código
    estable (el nombre que aparece en la salida JSON de la CLI) y puede
    serializarse con to_dict().
"""

from typing import Any


class HyperDistError(Exception):
    """
    Error base de todas las operaciones de dominio.

    Args:
        message: Descripción legible del problema
        **details: Datos adicionales que acompañan al error en la salida JSON
    """

    code: str = "HyperDistError"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message: str = message
        self.details: dict[str, Any] = details

    def to_dict(self) -> dict[str, Any]:
        """
        Devuelve el error como diccionario serializable.

        Returns:
            dict: {"type": código, "message": texto, "details": {...}}
        """
        return {"type": self.code, "message": self.message, "details": self.details}


class DivisionByZero(HyperDistError, ZeroDivisionError):
    code = "DivisionByZero"


class NotLimited(HyperDistError):
    code = "NotLimited"


class UnsupportedEvaluation(HyperDistError):
    code = "UnsupportedEvaluation"


class NotShadowable(HyperDistError):
    code = "NotShadowable"


class OrderCap(HyperDistError):
    code = "OrderCap"


class UnsupportedForm(HyperDistError):
    code = "UnsupportedForm"


class QuadratureFailure(HyperDistError):
    code = "QuadratureFailure"


class SupportViolation(HyperDistError):
    code = "SupportViolation"


class IndependenceError(HyperDistError):
    code = "IndependenceError"


class NotSContinuousHere(HyperDistError):
    code = "NotSContinuousHere"


class NotStandardSmooth(HyperDistError):
    code = "NotStandardSmooth"


class NotAdmitted(HyperDistError):
    code = "NotAdmitted"


class ConfigError(HyperDistError):
    code = "ConfigError"


class ParseError(HyperDistError):
    code = "ParseError"
