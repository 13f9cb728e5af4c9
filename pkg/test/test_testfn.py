"""
Tests para las funciones test

Para ejecutar: pytest test/test_testfn.py -v
"""

import math

import numpy as np
import pytest

from hyperdist.errors import OrderCap, ParseError
from hyperdist.hyperreal import HyperReal
from hyperdist.testfn import (Bump, Deriv, LinComb, Plateau, PolyMod, Scale, Shift, SupportInterval, deriv_as_testfn,
                              deriv_eval, parse_testfn_spec, support, testfn_from_json)

E_INV = math.exp(-1.0)


def central_difference(g, x, h=1e-5):
    return (g.values(np.array([x + h]))[0] - g.values(np.array([x - h]))[0]) / (2 * h)


class TestSoporte:

    @pytest.mark.parametrize("g,expected", [
        (Bump(0.0, 1.0), (-1.0, 1.0)),
        (Bump(2.0, 0.5), (1.5, 2.5)),
        (Shift(1.0, Bump(0.0, 1.0)), (0.0, 2.0)),
        (PolyMod((0.0, 1.0), Bump(0.0, 2.0)), (-2.0, 2.0)),
        (Plateau(1.0, 3.0), (-3.0, 3.0)),
        (LinComb(((1.0, Bump(-2.0, 1.0)), (2.0, Bump(2.0, 1.0)))), (-3.0, 3.0)),
    ])
    def test_soporte_estructural(self, g, expected):
        """Test: El soporte se calcula a partir del árbol"""
        assert support(g) == SupportInterval(*expected)

    def test_lincomb_ignora_pesos_nulos(self):
        """Test: Un término con peso 0 no amplía el soporte"""
        g = LinComb(((1.0, Bump(0.0, 1.0)), (0.0, Bump(5.0, 1.0))))
        assert support(g) == SupportInterval(-1.0, 1.0)

    def test_fuera_del_soporte_es_cero(self):
        """Test: g y sus derivadas son exactamente 0 fuera del soporte"""
        g = Bump(0.0, 1.0)
        assert deriv_eval(g, 0, 1.5) == 0.0
        assert deriv_eval(g, 3, -2.0) == 0.0

    @pytest.mark.parametrize("factory", [
        lambda: Bump(0.0, 0.0),
        lambda: Plateau(2.0, 1.0),
        lambda: SupportInterval(1.0, 0.0),
        lambda: LinComb(()),
    ])
    def test_parametros_invalidos(self, factory):
        """Test: Parámetros inválidos lanzan ValueError"""
        with pytest.raises(ValueError):
            factory()


class TestDerivadas:

    def test_bump_en_cero(self):
        """Test: b(0) = e⁻¹"""
        assert deriv_eval(Bump(0.0, 1.0), 0, 0.0) == pytest.approx(E_INV)

    def test_producto_por_t(self):
        """Test: (t·b)′(0) = b(0) = e⁻¹"""
        g = PolyMod((0.0, 1.0), Bump(0.0, 1.0))
        assert deriv_eval(g, 1, 0.0) == pytest.approx(E_INV, abs=1e-12)
        assert deriv_eval(g, 1, 0.0) == pytest.approx(central_difference(g, 0.0), abs=1e-8)

    @pytest.mark.parametrize("g", [
        Bump(0.3, 0.8),
        Shift(-0.5, Bump(0.0, 1.0)),
        Scale(3.0, Bump(0.0, 2.0)),
        PolyMod((1.0, -2.0, 0.5), Bump(0.0, 1.5)),
        Plateau(0.5, 1.5),
    ])
    def test_primera_derivada_contra_diferencias(self, g):
        """Test: g′ coincide con diferencias centrales en varios puntos"""
        for x in (-0.4, 0.1, 0.6):
            assert deriv_eval(g, 1, x) == pytest.approx(central_difference(g, x), abs=1e-7)

    def test_escala_del_semiancho(self):
        """Test: Para Bump(0, h), g″(0) = b″(0)/h²"""
        assert deriv_eval(Bump(0.0, 2.0), 2, 0.0) == pytest.approx(-2.0 * E_INV / 4.0)

    def test_nodo_deriv(self):
        """Test: Deriv(k, g) evalúa lo mismo que deriv_eval(g, k)"""
        g = PolyMod((0.0, 1.0), Bump(0.0, 1.0))
        for k in (1, 2, 3):
            d = deriv_as_testfn(g, k)
            assert d.values(np.array([0.2]))[0] == pytest.approx(deriv_eval(g, k, 0.2), rel=1e-12)

    def test_deriv_se_acumula(self):
        """Test: Derivar un Deriv suma los órdenes"""
        d = deriv_as_testfn(deriv_as_testfn(Bump(0.0, 1.0), 1), 2)
        assert d == Deriv(3, Bump(0.0, 1.0))
        assert deriv_as_testfn(Bump(0.0, 1.0), 0) == Bump(0.0, 1.0)

    def test_limite_de_orden(self):
        """Test: k por encima del límite lanza OrderCap"""
        with pytest.raises(OrderCap):
            deriv_eval(Bump(0.0, 1.0), 13, 0.0)
        with pytest.raises(OrderCap):
            deriv_eval(Bump(0.0, 1.0), 3, 0.0, cap=2)

    def test_orden_negativo(self):
        """Test: k < 0 lanza ValueError"""
        with pytest.raises(ValueError):
            deriv_eval(Bump(0.0, 1.0), -1, 0.0)


class TestOperadores:

    def test_combinaciones(self):
        """Test: g + h, g − h, r·g y −g evalúan punto a punto"""
        g, h = Bump(0.0, 1.0), Bump(0.5, 1.0)
        x = np.array([0.0, 0.25, 0.7])
        assert np.allclose((g + h).values(x), g.values(x) + h.values(x))
        assert np.allclose((g - h).values(x), g.values(x) - h.values(x))
        assert np.allclose((2.5 * g).values(x), 2.5 * g.values(x))
        assert np.allclose((-g).values(x), -g.values(x))


class TestEvaluacionHiperreal:

    def test_en_epsilon(self):
        """Test: *b(ε) = e⁻¹ − e⁻¹·ε² + ..."""
        value = Bump(0.0, 1.0).at(HyperReal.epsilon())
        assert value.coefficient(0) == pytest.approx(E_INV)
        assert value.coefficient(1) == 0.0
        assert value.coefficient(2) == pytest.approx(-E_INV)

    def test_en_real(self):
        """Test: En un real estándar coincide con values"""
        assert Bump(0.0, 1.0).at(HyperReal.from_real(0.5)).standard_part() == pytest.approx(
            Bump(0.0, 1.0).values(np.array([0.5]))[0])

    def test_en_infinito(self):
        """Test: En un punto infinito la extensión vale 0"""
        assert Bump(0.0, 1.0).at(1 / HyperReal.epsilon()).is_zero()


class TestLectura:

    @pytest.mark.parametrize("text,expected", [
        ("bump:0,1", Bump(0.0, 1.0)),
        ("bump:-1.5,0.5", Bump(-1.5, 0.5)),
        ("plateau:1,2", Plateau(1.0, 2.0)),
    ])
    def test_forma_corta(self, text, expected):
        """Test: bump:c,h y plateau:a,b"""
        assert parse_testfn_spec(text) == expected

    @pytest.mark.parametrize("text", ["bump", "bump:1", "gauss:0,1", "bump:a,b"])
    def test_forma_corta_invalida(self, text):
        """Test: Formatos desconocidos lanzan ParseError"""
        with pytest.raises(ParseError):
            parse_testfn_spec(text)

    def test_json(self):
        """Test: to_json y testfn_from_json reconstruyen el mismo árbol"""
        g = LinComb(((1.0, Shift(0.5, Bump(0.0, 1.0))), (-2.0, Deriv(1, PolyMod((0.0, 1.0), Plateau(0.5, 1.0))))))
        assert testfn_from_json(g.to_json()) == g

    @pytest.mark.parametrize("data", [{"center": 0}, {"kind": "gauss"}, {"kind": "shift", "inner": {"kind": "bump"}}])
    def test_json_invalido(self, data):
        """Test: JSON inválido lanza ParseError"""
        with pytest.raises(ParseError):
            testfn_from_json(data)
