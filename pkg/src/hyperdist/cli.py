"""
Interfaz de línea de comandos

Descripción:
    Cada subcomando ejecuta una operación y escribe su resultado como JSON
    en stdout (claves ordenadas, salida idéntica para entradas idénticas).
    Los logs van a stderr.

    Códigos de salida: 0 éxito, 1 error de dominio, 2 error de uso o de
    configuración. Todos los errores se escriben como {"error": {...}}.

    Argumentos de función: texto infijo ("sin(x + eps)"), fichero .json
    con el árbol, o @etiqueta de la sesión. Funciones test: "bump:c,h",
    "plateau:a,b", fichero .json o @etiqueta.

Ejemplos:
    python -m hyperdist classify --expr "1/eps + 3"
    python -m hyperdist dirac-check --g bump:0,1
    python -m hyperdist shadow --fn "sin(x + eps)" --grid=-2:2:0.5 --plot-data
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from hyperdist import __version__
from hyperdist.config import HyperDistConfig
from hyperdist.continuity import s_continuity, shadow, star_continuity
from hyperdist.errors import ConfigError, HyperDistError, ParseError
from hyperdist.fn_ast import Expr, expr_from_json, make_dirac
from hyperdist.functional import (GenFunctional, apply, derivative, equivalent, make_functional,
                                  schwarz_class_diagnostic, shadow_equivalence)
from hyperdist.hyperreal import using_policy
from hyperdist.infix import parse_constant, parse_expr
from hyperdist.legendre import brute_force_oracle, match, random_instance
from hyperdist.logging_config import LEVELS, configure_logging
from hyperdist.pairing import default_corpus, energy, member_T, pair
from hyperdist.session import Session, load_session
from hyperdist.testfn import Shift, TestFn, deriv_eval, parse_testfn_spec, testfn_from_json

logger = logging.getLogger(__name__)

PROG: str = "hyperdist"
EXIT_OK: int = 0
EXIT_DOMAIN: int = 1
EXIT_USAGE: int = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


# ==================== LECTURA DE ARGUMENTOS ====================

def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"No se pudo leer {path}: {e}") from e


def resolve_expr(text: str, session: Session) -> Expr:
    if text.startswith("@"):
        return session.expr(text[1:])
    if text.endswith(".json"):
        return expr_from_json(_read_json(text))
    return parse_expr(text, session.exprs)


def resolve_testfn(text: str, session: Session) -> TestFn:
    if text.startswith("@"):
        return session.testfn(text[1:])
    if text.endswith(".json"):
        return testfn_from_json(_read_json(text))
    return parse_testfn_spec(text)


def resolve_functional(text: str, session: Session) -> GenFunctional:
    if text.startswith("@") and text[1:] in session.functionals:
        return session.functional(text[1:])
    return make_functional(resolve_expr(text, session), text, cfg=session.config)


def parse_grid(text: str) -> list[float]:
    """
    "lo:hi:step" → [lo, lo + step, ..., hi].

    Raises:
        UsageError: Si el formato no es válido
    """
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError as e:
        raise UsageError(f"Malla inválida '{text}': se esperaba lo:hi:step") from e
    if step <= 0 or hi < lo:
        raise UsageError(f"Malla inválida '{text}': step > 0 y lo ≤ hi")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def _parse_targets(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        raise UsageError(f"Valores inválidos '{text}'") from e


def _parse_override(text: str) -> tuple[str, Any]:
    key, sep, raw = text.partition("=")
    if not sep:
        raise UsageError(f"Se esperaba CLAVE=VALOR en --set, no '{text}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _nth_derivative(F: GenFunctional, k: int, session: Session) -> GenFunctional:
    for _ in range(k):
        F = derivative(F, session.config)
    return F


def _csv(rows: list[tuple[float, float, str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["x", "value", "coef_index"])
    writer.writerows(rows)
    return buffer.getvalue()


# ==================== SUBCOMANDOS ====================

def cmd_classify(args: argparse.Namespace, session: Session) -> Any:
    value = parse_constant(args.expr)
    lead = value.leading_exponent
    payload = {"class": value.classify().value, "leading_exp": str(lead) if lead is not None else None,
               "value": value.to_json()}
    if value.is_limited():
        payload["standard_part"] = value.standard_part()
    return payload


def cmd_pair(args: argparse.Namespace, session: Session) -> Any:
    f, g = resolve_expr(args.fn, session), resolve_testfn(args.g, session)
    if args.sweep is None:
        return pair(f, g, session.config.quad).to_dict()
    sweep = []
    for shift in parse_grid(args.sweep):
        result = pair(f, Shift(shift, g), session.config.quad)
        sweep.append({"shift": shift, **result.to_dict()})
    if args.plot_data:
        rows = [(item["shift"], term["coef"], term["exp"]) for item in sweep for term in item["value"]]
        return _csv(rows)
    return {"sweep": sweep}


def cmd_energy(args: argparse.Namespace, session: Session) -> Any:
    return energy(resolve_expr(args.fn, session), args.lo, args.hi, session.config.quad).to_dict()


def cmd_member(args: argparse.Namespace, session: Session) -> Any:
    corpus = default_corpus(session.config.corpus)
    return member_T(resolve_expr(args.fn, session), corpus, session.config.quad).to_dict()


def cmd_functional(args: argparse.Namespace, session: Session) -> Any:
    F = _nth_derivative(resolve_functional(args.fn, session), args.k, session)
    g = resolve_testfn(args.g, session)
    return {"label": F.label, "deriv_order": F.deriv_order, "value": apply(F, g, session.config)}


def cmd_dirac_check(args: argparse.Namespace, session: Session) -> Any:
    g = resolve_testfn(args.g, session)
    F = _nth_derivative(make_functional(make_dirac(), "δ", cfg=session.config), args.k, session)
    applied = apply(F, g, session.config)
    expected = (-1) ** args.k * deriv_eval(g, args.k, 0.0, session.config.deriv_cap)
    key = "expected_g0" if args.k == 0 else f"expected_g{args.k}_0"
    return {"applied": applied, key: expected, "abs_err": abs(applied - expected), "k": args.k}


def cmd_legendre_match(args: argparse.Namespace, session: Session) -> Any:
    if args.random is not None:
        if args.testfns or args.targets:
            raise UsageError("--random no se combina con --testfns ni --targets")
        rng = np.random.default_rng(session.config.seed)
        g_list, targets = random_instance(args.random, rng)
        targets = [float(a) for a in targets]
    else:
        if not (args.testfns and args.targets):
            raise UsageError("Faltan --testfns y --targets (o --random M)")
        data = _read_json(args.testfns)
        if not isinstance(data, list):
            raise ParseError("El fichero de funciones test debe contener una lista")
        g_list = [parse_testfn_spec(item) if isinstance(item, str) else testfn_from_json(item) for item in data]
        targets = _parse_targets(args.targets)
    result = match(g_list, targets, args.N, session.config)
    payload = result.to_dict()
    if args.random is not None:
        payload["instance"] = {"seed": session.config.seed, "testfns": [g.to_json() for g in g_list],
                               "targets": targets}
    if args.oracle:
        oracle = brute_force_oracle(g_list, targets, args.N, session.config)
        payload["oracle_agreement"] = float(np.max(np.abs(np.array(result.functional_values)
                                                          - np.array(oracle.functional_values))))
    return payload


def cmd_s_continuity(args: argparse.Namespace, session: Session) -> Any:
    return s_continuity(resolve_expr(args.fn, session), args.at).to_dict()


def cmd_star_continuity(args: argparse.Namespace, session: Session) -> Any:
    return star_continuity(resolve_expr(args.fn, session), parse_constant(args.at)).to_dict()


def cmd_shadow(args: argparse.Namespace, session: Session) -> Any:
    f = resolve_expr(args.fn, session)
    result = shadow(f, parse_grid(args.grid))
    if args.plot_data:
        return _csv([(x, y, "0") for x, y in result.table])
    payload = result.to_dict()
    if args.check_equivalence and result.F is not None:
        corpus = default_corpus(session.config.corpus)
        payload["equivalence"] = shadow_equivalence(f, result, corpus, session.config).to_dict()
    return payload


def cmd_equiv(args: argparse.Namespace, session: Session) -> Any:
    f, h = resolve_expr(args.fn, session), resolve_expr(args.other, session)
    return equivalent(f, h, default_corpus(session.config.corpus), session.config).to_dict()


def cmd_schwarz_diagnostic(args: argparse.Namespace, session: Session) -> Any:
    F = _nth_derivative(resolve_functional(args.fn, session), args.k, session)
    g = resolve_testfn(args.g, session)
    seq = [g * (1.0 / n) if args.decay else g for n in range(1, args.n_max + 1)]
    return schwarz_class_diagnostic(F, seq, args.n_max, session.config).to_dict()


COMMANDS: dict[str, Callable[[argparse.Namespace, Session], Any]] = {
    "classify": cmd_classify,
    "pair": cmd_pair,
    "energy": cmd_energy,
    "member": cmd_member,
    "functional": cmd_functional,
    "dirac-check": cmd_dirac_check,
    "legendre-match": cmd_legendre_match,
    "s-continuity": cmd_s_continuity,
    "star-continuity": cmd_star_continuity,
    "shadow": cmd_shadow,
    "equiv": cmd_equiv,
    "schwarz-diagnostic": cmd_schwarz_diagnostic,
}


# ==================== PARSER ====================

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Funciones generalizadas no estándar a escala de escritorio")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    parser.add_argument("--config", help="Fichero JSON de configuración")
    parser.add_argument("--session", help="Fichero JSON de sesión con etiquetas")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="CLAVE=VALOR",
                        help="Sustituye un valor de configuración (p. ej. quad.abs_tol=1e-9)")
    parser.add_argument("--log-level", default="WARNING", choices=sorted(LEVELS), help="Nivel de logging")
    parser.add_argument("--log-file", help="Guarda también los logs en este fichero")
    parser.add_argument("--show-config", action="store_true", help="Imprime la configuración efectiva")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("classify", help="Clasifica una constante hiperreal")
    p.add_argument("--expr", required=True)

    p = sub.add_parser("pair", help="Calcula ⟨f, *g⟩")
    p.add_argument("--fn", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--sweep", help="Traslada g sobre lo:hi:step")
    p.add_argument("--plot-data", action="store_true")

    p = sub.add_parser("energy", help="Calcula *∫_c^d f²")
    p.add_argument("--fn", required=True)
    p.add_argument("--from", dest="lo", type=float, required=True)
    p.add_argument("--to", dest="hi", type=float, required=True)

    p = sub.add_parser("member", help="Pertenencia a T sobre el corpus")
    p.add_argument("--fn", required=True)

    p = sub.add_parser("functional", help="Aplica un funcional (y sus derivadas) a g")
    p.add_argument("--fn", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--k", type=int, default=0)

    p = sub.add_parser("dirac-check", help="Compara δ^(k)[g] con (−1)^k g^(k)(0)")
    p.add_argument("--g", required=True)
    p.add_argument("--k", type=int, default=0)

    p = sub.add_parser("legendre-match", help="Ajusta un polinomio a valores de funcionales")
    p.add_argument("--testfns", help="Fichero JSON con la lista de funciones test")
    p.add_argument("--targets", help="Valores separados por comas")
    p.add_argument("--random", type=int, default=None, metavar="M",
                   help="Instancia aleatoria de M bumps generada con la semilla de la configuración")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--oracle", action="store_true", help="Compara con la solución de norma mínima")

    p = sub.add_parser("s-continuity", help="S-continuidad en un real")
    p.add_argument("--fn", required=True)
    p.add_argument("--at", type=float, required=True)

    p = sub.add_parser("star-continuity", help="*-continuidad en un hiperreal")
    p.add_argument("--fn", required=True)
    p.add_argument("--at", required=True, help="Constante hiperreal, p. ej. \"eps\"")

    p = sub.add_parser("shadow", help="Sombra estándar sobre una malla")
    p.add_argument("--fn", required=True)
    p.add_argument("--grid", required=True, help="lo:hi:step (use --grid=-2:2:0.5 con extremos negativos)")
    p.add_argument("--plot-data", action="store_true")
    p.add_argument("--check-equivalence", action="store_true")

    p = sub.add_parser("equiv", help="Equivalencia módulo T₀")
    p.add_argument("--fn", required=True)
    p.add_argument("--other", required=True)

    p = sub.add_parser("schwarz-diagnostic", help="Diagnóstico secuencial con g_n = g/n")
    p.add_argument("--fn", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--no-decay", dest="decay", action="store_false", help="Usa la sucesión constante g_n = g")
    return parser


def _load_config(args: argparse.Namespace) -> tuple[HyperDistConfig, Optional[Session]]:
    overrides = dict(_parse_override(item) for item in args.overrides)
    base = HyperDistConfig.load(args.config) if args.config else None
    if base is None and args.session:
        base = load_session(args.session).config
    try:
        config = (base or HyperDistConfig()).with_overrides(**overrides)
    except (AttributeError, TypeError, ValueError) as e:
        raise ConfigError(f"Sustitución de configuración inválida: {e}") from e
    session = load_session(args.session, config) if args.session else None
    return config, session


def _emit(payload: Any, out: Any) -> None:
    if isinstance(payload, str):
        out.write(payload)
    else:
        out.write(json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n")


def _error_payload(code: str, message: str, details: Optional[dict[str, Any]] = None) -> dict[str, Any]:
    return {"error": {"type": code, "message": message, "details": details or {}}}


def main(argv: Optional[Sequence[str]] = None, out: Any = None) -> int:
    """
    Punto de entrada de la CLI.

    Args:
        argv: Argumentos (por defecto sys.argv[1:])
        out: Flujo de salida (por defecto sys.stdout)

    Returns:
        int: Código de salida
    """
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.log_level, args.log_file)
        config, session = _load_config(args)
        session = session or Session(config)
        if args.show_config:
            _emit(config.to_dict(), out)
            return EXIT_OK
        if args.command is None:
            raise UsageError("Falta el subcomando")
        logger.info(f"Ejecutando {args.command}")
        with using_policy(config.policy):
            _emit(COMMANDS[args.command](args, session), out)
        return EXIT_OK
    except UsageError as e:
        _emit(_error_payload("UsageError", str(e)), out)
        return EXIT_USAGE
    except ConfigError as e:
        _emit({"error": e.to_dict()}, out)
        return EXIT_USAGE
    except HyperDistError as e:
        _emit({"error": e.to_dict()}, out)
        return EXIT_DOMAIN
    except ValueError as e:
        logger.error(f"Entrada inválida: {e}")
        _emit(_error_payload("ValueError", str(e)), out)
        return EXIT_DOMAIN
