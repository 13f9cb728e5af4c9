"""
Ficheros de sesión

Descripción:
    Una sesión agrupa la configuración y un conjunto de etiquetas con nombre
    (funciones internas, funciones test y funcionales) que la CLI puede
    referenciar como @etiqueta. Formato:

        {
          "config": {...},
          "bindings": {
            "f":  {"kind": "expr", "infix": "sin(x + eps)"},
            "d":  {"kind": "expr", "tree": {"op": "mollify", ...}},
            "g":  {"kind": "testfn", "spec": "bump:0,1"},
            "h":  {"kind": "testfn", "fn": {"kind": "bump", ...}},
            "D1": {"kind": "functional", "rep": "d", "deriv_order": 1}
          }
        }

    Las expresiones infijas pueden usar etiquetas definidas antes en el
    mismo fichero. Las etiquetas repetidas son un error de configuración.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from hyperdist.config import DEFAULT_CONFIG, HyperDistConfig
from hyperdist.errors import ConfigError, HyperDistError
from hyperdist.fn_ast import Expr, expr_from_json
from hyperdist.functional import GenFunctional, derivative, make_functional
from hyperdist.hyperreal import using_policy
from hyperdist.infix import parse_expr
from hyperdist.testfn import TestFn, parse_testfn_spec, testfn_from_json

logger = logging.getLogger(__name__)

BINDING_KINDS: tuple[str, ...] = ("expr", "testfn", "functional")


@dataclass
class Session:
    """Configuración más etiquetas con nombre."""

    config: HyperDistConfig = DEFAULT_CONFIG
    exprs: dict[str, Expr] = field(default_factory=dict)
    testfns: dict[str, TestFn] = field(default_factory=dict)
    functionals: dict[str, GenFunctional] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return sorted([*self.exprs, *self.testfns, *self.functionals])

    def expr(self, label: str) -> Expr:
        if label in self.exprs:
            return self.exprs[label]
        if label in self.functionals:
            return self.functionals[label].rep
        raise ConfigError(f"Etiqueta de función desconocida: @{label}", labels=self.labels)

    def testfn(self, label: str) -> TestFn:
        if label not in self.testfns:
            raise ConfigError(f"Etiqueta de función test desconocida: @{label}", labels=self.labels)
        return self.testfns[label]

    def functional(self, label: str) -> GenFunctional:
        if label not in self.functionals:
            raise ConfigError(f"Etiqueta de funcional desconocida: @{label}", labels=self.labels)
        return self.functionals[label]


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    seen: dict[str, Any] = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError(f"Etiqueta repetida en la sesión: {key}")
        seen[key] = value
    return seen


def _add_binding(session: Session, label: str, spec: Any) -> None:
    if not isinstance(spec, dict) or spec.get("kind") not in BINDING_KINDS:
        raise ConfigError(f"Etiqueta '{label}': se esperaba kind en {BINDING_KINDS}")
    kind = spec["kind"]
    if kind == "expr":
        if "infix" in spec:
            session.exprs[label] = parse_expr(str(spec["infix"]), session.exprs)
        elif "tree" in spec:
            session.exprs[label] = expr_from_json(spec["tree"])
        else:
            raise ConfigError(f"Etiqueta '{label}': una expresión necesita 'infix' o 'tree'")
    elif kind == "testfn":
        if "spec" in spec:
            session.testfns[label] = parse_testfn_spec(str(spec["spec"]))
        elif "fn" in spec:
            session.testfns[label] = testfn_from_json(spec["fn"])
        else:
            raise ConfigError(f"Etiqueta '{label}': una función test necesita 'spec' o 'fn'")
    else:
        rep_text = str(spec.get("rep", ""))
        rep = session.exprs[rep_text] if rep_text in session.exprs else parse_expr(rep_text, session.exprs)
        F = make_functional(rep, label, cfg=session.config)
        for _ in range(int(spec.get("deriv_order", 0))):
            F = derivative(F, session.config)
        session.functionals[label] = F


def session_from_dict(data: Any, config: Optional[HyperDistConfig] = None) -> Session:
    """
    Construye una sesión a partir de su diccionario.

    Args:
        data: {"config": {...}, "bindings": {...}}
        config: Configuración que sustituye a la del fichero

    Raises:
        ConfigError: Si el formato o alguna etiqueta no es válida
    """
    if not isinstance(data, dict):
        raise ConfigError("La sesión debe ser un objeto JSON")
    unknown = set(data) - {"config", "bindings"}
    if unknown:
        raise ConfigError(f"Claves desconocidas en la sesión: {sorted(unknown)}")
    session = Session(config or HyperDistConfig.from_dict(data.get("config") or {}))
    bindings = data.get("bindings") or {}
    if not isinstance(bindings, dict):
        raise ConfigError("'bindings' debe ser un objeto")
    with using_policy(session.config.policy):
        for label, spec in bindings.items():
            try:
                _add_binding(session, label, spec)
            except ConfigError:
                raise
            except HyperDistError as e:
                logger.error(f"Etiqueta '{label}' inválida: {e}")
                raise ConfigError(f"Etiqueta '{label}' inválida: {e.message}", cause=e.to_dict()) from e
    logger.info(f"Sesión cargada: {len(session.labels)} etiquetas")
    return session


def load_session(path: str | Path, config: Optional[HyperDistConfig] = None) -> Session:
    """
    Lee una sesión desde un fichero JSON.

    Raises:
        ConfigError: Si el fichero no existe, no es JSON o tiene etiquetas repetidas
    """
    logger.debug(f"Leyendo sesión de {path}")
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"), object_pairs_hook=_reject_duplicates)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"No se pudo leer la sesión {path}: {e}")
        raise ConfigError(f"No se pudo leer la sesión {path}: {e}") from e
    return session_from_dict(data, config)
