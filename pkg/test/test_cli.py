"""
Tests para la interfaz de línea de comandos

Para ejecutar: pytest test/test_cli.py -v
"""

import io
import json
import math

import pytest

from hyperdist.cli import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, UsageError, main, parse_grid

E_INV = math.exp(-1.0)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text)


class TestMalla:

    @pytest.mark.parametrize("text,expected", [
        ("0:1:0.25", [0.0, 0.25, 0.5, 0.75, 1.0]),
        ("0:1:0.3", [0.0, 0.3, 0.6, 0.9]),
        ("-1:1:1", [-1.0, 0.0, 1.0]),
        ("2:2:1", [2.0]),
    ])
    def test_malla(self, text, expected):
        """Test: lo:hi:step incluye hi cuando cae en la malla"""
        assert parse_grid(text) == expected

    @pytest.mark.parametrize("text", ["0:1", "a:b:c", "1:0:0.1", "0:1:0"])
    def test_malla_invalida(self, text):
        """Test: Formatos inválidos lanzan UsageError"""
        with pytest.raises(UsageError):
            parse_grid(text)


class TestClasificar:

    def test_infinito(self):
        """Test: "1/eps + 3" es INFINITE con exponente inicial −1"""
        code, data = run_json("classify", "--expr", "1/eps + 3")
        assert code == EXIT_OK
        assert data["class"] == "INFINITE"
        assert data["leading_exp"] == "-1"
        assert "standard_part" not in data

    def test_apreciable(self):
        """Test: "3 + eps" tiene parte estándar 3"""
        code, data = run_json("classify", "--expr", "3 + eps")
        assert data["class"] == "APPRECIABLE"
        assert data["standard_part"] == 3.0

    def test_no_constante(self):
        """Test: Una expresión con x es un error de dominio"""
        code, data = run_json("classify", "--expr", "x + 1")
        assert code == EXIT_DOMAIN
        assert data["error"]["type"] == "ParseError"


class TestEmparejamiento:

    def test_constante_epsilon(self):
        """Test: ⟨ε, *b⟩ es infinitesimal"""
        code, data = run_json("pair", "--fn", "eps", "--g", "bump:0,1")
        assert code == EXIT_OK
        assert data["status"] == "INFINITESIMAL"
        assert data["value"][0]["exp"] == "1"

    def test_barrido_csv(self):
        """Test: --sweep con --plot-data escribe CSV con cabecera"""
        code, text = run("pair", "--fn", "dirac()", "--g", "bump:0,1", "--sweep", "0:0.5:0.5", "--plot-data")
        lines = text.splitlines()
        assert code == EXIT_OK
        assert lines[0] == "x,value,coef_index"
        assert lines[1].startswith("0.0,")

    def test_energia(self):
        """Test: st ∫₀¹ sin²(x + ε) = (1 − sin 2/2)/2"""
        code, data = run_json("energy", "--fn", "sin(x + eps)", "--from", "0", "--to", "1")
        assert code == EXIT_OK
        assert data["value"][0]["coef"] == pytest.approx((1 - math.sin(2.0) / 2) / 2, abs=1e-9)

    def test_pertenencia(self):
        """Test: (1/ε)·b se rechaza con testigo"""
        code, data = run_json("member", "--fn", "scaled_bump()")
        assert code == EXIT_OK
        assert data["verdict"] == "REJECTED"
        assert data["witness"]["kind"] == "bump"


class TestFuncionales:

    def test_dirac(self):
        """Test: δ[b] = b(0) con error por debajo de 1e−8"""
        code, data = run_json("dirac-check", "--g", "bump:0,1")
        assert code == EXIT_OK
        assert data["expected_g0"] == pytest.approx(E_INV)
        assert data["abs_err"] < 1e-8
        assert data["k"] == 0

    def test_derivada_de_dirac(self):
        """Test: δ′[g] = −g′(0) con la clave del orden"""
        code, data = run_json("dirac-check", "--g", "bump:0.3,1", "--k", "1")
        assert code == EXIT_OK
        assert data["abs_err"] < 1e-7
        assert "expected_g1_0" in data

    def test_funcional(self):
        """Test: El funcional de sin derivado una vez actúa como cos"""
        code, data = run_json("functional", "--fn", "sin(x)", "--g", "bump:0,1", "--k", "1")
        assert code == EXIT_OK
        assert data["deriv_order"] == 1
        assert data["value"] > 0

    def test_no_admitido(self):
        """Test: Un representante rechazado es un error de dominio"""
        code, data = run_json("functional", "--fn", "scaled_bump()", "--g", "bump:0,1")
        assert code == EXIT_DOMAIN
        assert data["error"]["type"] == "NotAdmitted"

    def test_equivalencia(self):
        """Test: sin(x + ε) ~ sin(x)"""
        code, data = run_json("equiv", "--fn", "sin(x + eps)", "--other", "sin(x)")
        assert code == EXIT_OK
        assert data["kind"] == "EQUIVALENT_NOT_REFUTED"

    def test_diagnostico_de_schwarz(self):
        """Test: δ sobre g/n es consistente"""
        code, data = run_json("schwarz-diagnostic", "--fn", "dirac()", "--g", "bump:0,1", "--n-max", "6")
        assert code == EXIT_OK
        assert data["verdict"] == "CONSISTENT"
        assert len(data["trend"]) == 6

    def test_diagnostico_sin_decaimiento(self):
        """Test: Con g_n = g la precondición falla"""
        code, data = run_json("schwarz-diagnostic", "--fn", "dirac()", "--g", "bump:0,1", "--n-max", "6",
                              "--no-decay")
        assert data["verdict"] == "INCONSISTENT"
        assert not data["precondition_ok"]


class TestLegendre:

    def test_ajuste_con_oraculo(self, tmp_path):
        """Test: Un bump con valor 1 usa la columna 0 y coincide con el oráculo"""
        path = tmp_path / "gs.json"
        path.write_text(json.dumps(["bump:0,1"]), encoding="utf-8")
        code, data = run_json("legendre-match", "--testfns", str(path), "--targets", "1", "--oracle")
        assert code == EXIT_OK
        assert data["selected_columns"] == [0]
        assert data["oracle_agreement"] < 1e-8

    def test_instancia_aleatoria_reproducible(self):
        """Test: --random usa la semilla de la configuración y repite la salida"""
        argv = ("legendre-match", "--random", "3", "--oracle")
        code, first = run(*argv)
        assert code == EXIT_OK
        assert run(*argv) == (code, first)
        data = json.loads(first)
        assert data["instance"]["seed"] == 0
        assert len(data["instance"]["testfns"]) == 3
        assert data["oracle_agreement"] < 1e-8

    def test_semilla_distinta(self):
        """Test: Otra semilla genera otra instancia"""
        _, a = run_json("legendre-match", "--random", "2")
        _, b = run_json("--set", "seed=1", "legendre-match", "--random", "2")
        assert b["instance"]["seed"] == 1
        assert a["instance"]["testfns"] != b["instance"]["testfns"]

    @pytest.mark.parametrize("argv", [
        ["legendre-match", "--random", "2", "--targets", "1,2"],
        ["legendre-match", "--targets", "1"],
    ])
    def test_argumentos_incompatibles(self, argv):
        """Test: --random excluye --testfns/--targets y sin él ambos son obligatorios"""
        code, data = run_json(*argv)
        assert code == EXIT_USAGE
        assert data["error"]["type"] == "UsageError"

    def test_fichero_sin_lista(self, tmp_path):
        """Test: El fichero debe contener una lista"""
        path = tmp_path / "gs.json"
        path.write_text("{}", encoding="utf-8")
        code, data = run_json("legendre-match", "--testfns", str(path), "--targets", "1")
        assert code == EXIT_DOMAIN


class TestContinuidad:

    def test_s_continuidad_refutada(self):
        """Test: sin(x/ε) no es S-continua en 0"""
        code, data = run_json("s-continuity", "--fn", "sin(x/eps)", "--at", "0")
        assert code == EXIT_OK
        assert data["kind"] == "REFUTED"
        assert data["witness"][0]["exp"] == "1"

    def test_estrella_continuidad(self):
        """Test: El escalón de salto ε se refuta en su corte"""
        code, data = run_json("star-continuity", "--fn", "step(0, 0)", "--at", "0")
        assert code == EXIT_OK
        assert data["kind"] == "REFUTED"

    def test_sombra(self):
        """Test: La sombra de sin(x + ε) es sin con equivalencia no refutada"""
        code, data = run_json("shadow", "--fn", "sin(x + eps)", "--grid=0:1:0.5", "--check-equivalence")
        assert code == EXIT_OK
        assert data["kind"] == "ast"
        assert data["equivalence"]["kind"] == "EQUIVALENT_NOT_REFUTED"

    def test_sombra_csv(self):
        """Test: --plot-data escribe una fila por punto de la malla"""
        code, text = run("shadow", "--fn", "sin(x + eps)", "--grid=-1:1:0.5", "--plot-data")
        lines = text.splitlines()
        assert lines[0] == "x,value,coef_index"
        assert len(lines) == 6
        assert lines[3].startswith("0.0,0.0")

    def test_sombra_no_s_continua(self):
        """Test: La sombra del indicador en 0 es un error de dominio"""
        code, data = run_json("shadow", "--fn", "indicator()", "--grid=-1:1:0.5")
        assert code == EXIT_DOMAIN
        assert data["error"]["type"] == "NotSContinuousHere"


class TestOpcionesGlobales:

    def test_sin_subcomando(self):
        """Test: Sin subcomando es un error de uso"""
        code, data = run_json()
        assert code == EXIT_USAGE
        assert data["error"]["type"] == "UsageError"

    @pytest.mark.parametrize("argv", [
        ["pair", "--fn", "x"],
        ["nada"],
        ["s-continuity", "--fn", "x", "--at", "cero"],
        ["--log-level", "VERBOSE", "classify", "--expr", "1"],
        ["--set", "sin_igual", "classify", "--expr", "1"],
    ])
    def test_error_de_uso(self, argv):
        """Test: Argumentos inválidos devuelven 2"""
        code, data = run_json(*argv)
        assert code == EXIT_USAGE

    def test_mostrar_configuracion(self):
        """Test: --show-config aplica las sustituciones de --set"""
        code, data = run_json("--set", "quad.abs_tol=1e-9", "--set", "deriv_cap=4", "--show-config")
        assert code == EXIT_OK
        assert data["quad"]["abs_tol"] == 1e-9
        assert data["deriv_cap"] == 4

    @pytest.mark.parametrize("override", ["quad.nada=1", "nada.abs_tol=1", "quad.max_subdivisions=0"])
    def test_sustitucion_invalida(self, override):
        """Test: Una sustitución inválida es un error de configuración"""
        code, data = run_json("--set", override, "--show-config")
        assert code == EXIT_USAGE

    def test_politica_de_truncamiento(self):
        """Test: --set policy.max_order=2 descarta ε³ al leer la constante"""
        code, data = run_json("--set", "policy.max_order=2", "classify", "--expr", "eps**3 + eps")
        assert code == EXIT_OK
        assert data["value"] == [{"coef": 1.0, "exp": "1"}]
        _, default = run_json("classify", "--expr", "eps**3 + eps")
        assert default["value"] == [{"coef": 1.0, "exp": "1"}, {"coef": 1.0, "exp": "3"}]

    def test_politica_de_la_sesion(self, tmp_path):
        """Test: La política de la sesión se aplica a sus etiquetas y a la orden"""
        path = tmp_path / "sesion.json"
        path.write_text(json.dumps({"config": {"policy": {"max_order": 2}},
                                    "bindings": {"f": {"kind": "expr", "infix": "eps**3 + 1"}}}), encoding="utf-8")
        code, data = run_json("--session", str(path), "pair", "--fn", "@f", "--g", "bump:0,1")
        assert code == EXIT_OK
        assert [item["exp"] for item in data["value"]] == ["0"]

    def test_fichero_de_configuracion(self, tmp_path):
        """Test: --config carga la configuración del fichero"""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"deriv_cap": 2}), encoding="utf-8")
        code, data = run_json("--config", str(path), "--show-config")
        assert data["deriv_cap"] == 2

    def test_sesion(self, tmp_path):
        """Test: Las etiquetas de la sesión se usan con @"""
        path = tmp_path / "sesion.json"
        path.write_text(json.dumps({"bindings": {
            "d": {"kind": "expr", "infix": "dirac()"},
            "g": {"kind": "testfn", "spec": "bump:0,1"},
        }}), encoding="utf-8")
        code, data = run_json("--session", str(path), "functional", "--fn", "@d", "--g", "@g")
        assert code == EXIT_OK
        assert data["value"] == pytest.approx(E_INV, abs=1e-8)

    def test_sesion_con_etiqueta_repetida(self, tmp_path):
        """Test: Una sesión con etiquetas repetidas devuelve 2"""
        path = tmp_path / "sesion.json"
        path.write_text('{"bindings": {"g": {"kind": "testfn", "spec": "bump:0,1"}, '
                        '"g": {"kind": "testfn", "spec": "bump:0,2"}}}', encoding="utf-8")
        code, data = run_json("--session", str(path), "classify", "--expr", "1")
        assert code == EXIT_USAGE
        assert data["error"]["type"] == "ConfigError"

    def test_determinista(self):
        """Test: La misma entrada produce la misma salida"""
        argv = ("pair", "--fn", "sin(x + eps)", "--g", "bump:0.5,1")
        assert run(*argv) == run(*argv)

    def test_fichero_de_log(self, tmp_path):
        """Test: --log-file guarda los mensajes del nivel pedido"""
        path = tmp_path / "hyperdist.log"
        run("--log-level", "INFO", "--log-file", str(path), "classify", "--expr", "eps")
        assert "Ejecutando classify" in path.read_text(encoding="utf-8")

    def test_version(self, capsys):
        """Test: --version imprime la versión y sale con 0"""
        with pytest.raises(SystemExit) as exc_info:
            main(["--version"])
        assert exc_info.value.code == 0
        assert "hyperdist" in capsys.readouterr().out
