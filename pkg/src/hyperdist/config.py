"""
Configuración de hyperdist

Descripción:
    Dataclasses inmutables con los parámetros de truncamiento de las series,
    de la cuadratura, del corpus de funciones test y del ajuste de Legendre.
    Los valores por defecto están embebidos aquí; la CLI los imprime con
    --show-config y permite sobrescribirlos desde un fichero JSON.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from hyperdist.errors import ConfigError

logger = logging.getLogger(__name__)

QUADRATURE_RULES: tuple[str, ...] = ("gauss-kronrod-15", "adaptive-simpson")


@dataclass(frozen=True)
class TruncationPolicy:
    """
    Política de truncamiento de una serie en ε.

    Args:
        max_order: Exponente máximo conservado (racional exacto)
        max_terms: Número máximo de términos conservados
        zero_tol: Tolerancia usada solo al clasificar, nunca en la aritmética
    """

    max_order: Fraction = Fraction(6)
    max_terms: int = 64
    zero_tol: float = 1e-12

    def __post_init__(self) -> None:
        if not isinstance(self.max_order, Fraction):
            object.__setattr__(self, "max_order", Fraction(self.max_order))
        if self.max_order <= 0:
            raise ConfigError(f"max_order debe ser positivo: {self.max_order}")
        if self.max_terms < 8:
            raise ConfigError(f"max_terms debe ser >= 8: {self.max_terms}")
        if self.zero_tol < 0:
            raise ConfigError(f"zero_tol no puede ser negativo: {self.zero_tol}")

    def to_dict(self) -> dict[str, Any]:
        return {"max_order": str(self.max_order), "max_terms": self.max_terms,
                "zero_tol": self.zero_tol}


@dataclass(frozen=True)
class QuadratureConfig:
    """
    Parámetros de la cuadratura adaptativa.

    Args:
        abs_tol: Tolerancia absoluta por coeficiente
        max_subdivisions: Máximo de subintervalos antes de fallar
        rule: "gauss-kronrod-15" o "adaptive-simpson"
    """

    abs_tol: float = 1e-10
    max_subdivisions: int = 2000
    rule: str = "gauss-kronrod-15"

    def __post_init__(self) -> None:
        if self.abs_tol <= 0:
            raise ConfigError(f"abs_tol debe ser positivo: {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise ConfigError(f"max_subdivisions debe ser >= 1: {self.max_subdivisions}")
        if self.rule not in QUADRATURE_RULES:
            raise ConfigError(f"Regla de cuadratura desconocida: {self.rule}")


@dataclass(frozen=True)
class CorpusSpec:
    """
    Descripción del corpus de funciones test por defecto.

    Bumps en cada centro con cada semiancho, más bumps centrados en 0
    multiplicados por monomios t^k.
    """

    centers: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)
    halfwidths: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    monomial_degrees: tuple[int, ...] = (1, 2, 3, 4)
    monomial_halfwidths: tuple[float, ...] = (0.5, 1.0, 2.0)

    def __post_init__(self) -> None:
        for name in ("centers", "halfwidths", "monomial_degrees", "monomial_halfwidths"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if any(h <= 0 for h in self.halfwidths + self.monomial_halfwidths):
            raise ConfigError("Los semianchos del corpus deben ser positivos")
        if not self.centers or not self.halfwidths:
            raise ConfigError("El corpus necesita al menos un centro y un semiancho")


@dataclass(frozen=True)
class MatchConfig:
    """
    Parámetros del ajuste de Legendre.

    Args:
        N: Número de polinomios de la base
        match_tol: Residuo máximo admitido |∫p·g_j − a_j|
        cond_tol: Pivote mínimo absoluto en la eliminación
        pivot_threshold: Fracción del pivote máximo que hace admisible una columna
        support_margin: Factor sobre el semiancho del soporte para elegir c
    """

    N: int = 64
    match_tol: float = 1e-6
    cond_tol: float = 1e-10
    pivot_threshold: float = 0.1
    support_margin: float = 1.1

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ConfigError(f"N debe ser >= 1: {self.N}")
        if not 0 < self.pivot_threshold <= 1:
            raise ConfigError(f"pivot_threshold fuera de (0, 1]: {self.pivot_threshold}")
        if self.support_margin <= 1:
            raise ConfigError(f"support_margin debe ser > 1: {self.support_margin}")


@dataclass(frozen=True)
class HyperDistConfig:
    """
    Configuración completa de una sesión.
    """

    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    corpus: CorpusSpec = field(default_factory=CorpusSpec)
    match: MatchConfig = field(default_factory=MatchConfig)
    seed: int = 0
    deriv_cap: int = 12
    infinitesimal_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.deriv_cap < 0:
            raise ConfigError(f"deriv_cap no puede ser negativo: {self.deriv_cap}")
        if self.infinitesimal_tol <= 0:
            raise ConfigError(f"infinitesimal_tol debe ser positivo: {self.infinitesimal_tol}")

    def to_dict(self) -> dict[str, Any]:
        """
        Devuelve la configuración como diccionario JSON.
        """
        data: dict[str, Any] = asdict(self)
        data["policy"] = self.policy.to_dict()
        for key in ("centers", "halfwidths", "monomial_degrees", "monomial_halfwidths"):
            data["corpus"][key] = list(data["corpus"][key])
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "HyperDistConfig":
        """
        Construye la configuración a partir de un diccionario parcial.

        Las claves ausentes toman su valor por defecto; las desconocidas
        provocan ConfigError.

        Args:
            data: Diccionario (por ejemplo leído de un JSON)

        Returns:
            HyperDistConfig: Configuración validada

        Raises:
            ConfigError: Si hay claves desconocidas o valores inválidos
        """
        sections: dict[str, type] = {"policy": TruncationPolicy, "quad": QuadratureConfig,
                                     "corpus": CorpusSpec, "match": MatchConfig}
        known: set[str] = {f.name for f in fields(cls)}
        unknown: set[str] = set(data) - known
        if unknown:
            raise ConfigError(f"Claves de configuración desconocidas: {sorted(unknown)}")

        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key in sections:
                kwargs[key] = _build_section(sections[key], value, key)
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(f"Configuración inválida: {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "HyperDistConfig":
        """
        Lee la configuración desde un fichero JSON.

        Raises:
            ConfigError: Si el fichero no existe o no es JSON válido
        """
        logger.debug(f"Leyendo configuración de {path}")
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"No se pudo leer la configuración {path}: {e}")
            raise ConfigError(f"No se pudo leer la configuración {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("La configuración debe ser un objeto JSON")
        return cls.from_dict(data)

    def with_overrides(self, **overrides: Any) -> "HyperDistConfig":
        """
        Devuelve una copia con valores sustituidos.

        Acepta claves de primer nivel y claves con punto ("quad.abs_tol").
        Los valores None se ignoran.
        """
        config: HyperDistConfig = self
        for key, value in overrides.items():
            if value is None:
                continue
            section, _, name = key.partition(".")
            if name:
                current = getattr(config, section)
                config = replace(config, **{section: replace(current, **{name: value})})
            else:
                config = replace(config, **{section: value})
        return config


def _build_section(section_cls: type, value: Optional[dict[str, Any]], name: str) -> Any:
    if value is None:
        return section_cls()
    if not isinstance(value, dict):
        raise ConfigError(f"La sección '{name}' debe ser un objeto")
    known: set[str] = {f.name for f in fields(section_cls)}
    unknown: set[str] = set(value) - known
    if unknown:
        raise ConfigError(f"Claves desconocidas en '{name}': {sorted(unknown)}")
    kwargs: dict[str, Any] = dict(value)
    if section_cls is TruncationPolicy and "max_order" in kwargs:
        try:
            kwargs["max_order"] = Fraction(str(kwargs["max_order"]))
        except ValueError as e:
            raise ConfigError(f"max_order inválido: {kwargs['max_order']}") from e
    try:
        return section_cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"Sección '{name}' inválida: {e}") from e


DEFAULT_CONFIG: HyperDistConfig = HyperDistConfig()
