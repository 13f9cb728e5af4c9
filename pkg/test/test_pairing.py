"""
Tests para el producto casi-interno, la energía y la pertenencia a T

Para ejecutar: pytest test/test_pairing.py -v
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from hyperdist import gallery
from hyperdist.config import QuadratureConfig
from hyperdist.errors import UnsupportedForm
from hyperdist.fn_ast import Add, Bump, Const, Cos, Exp, Mollify, Mul, Sin, TestRef, Var, make_dirac
from hyperdist.hyperreal import HyperReal
from hyperdist.pairing import (MembershipVerdict, PairingForm, PairingStatus, default_corpus, energy, member_T,
                               normal_form, pair, schwarz_check)
from hyperdist.testfn import Bump as TestBump
from hyperdist.testfn import PolyMod, Shift

EPS = HyperReal.epsilon()
E_INV = math.exp(-1.0)
I_B = 0.443993816168079
G = TestBump(0.0, 1.0)
QUAD_TOL = 10 * QuadratureConfig().abs_tol

# Integrandos REGULAR: primitivas suaves, constantes con ε y sumas y productos de ellas
regular_exprs = st.recursive(
    st.sampled_from([Var(), Sin(), Cos(), Exp(), Const(2.0), gallery.shifted_sine(), Const(EPS) * Var()]),
    lambda children: st.one_of(st.builds(Add, children, children), st.builds(Mul, children, children)),
    max_leaves=3,
)
bumps = st.builds(TestBump, st.floats(-1.0, 1.0), st.floats(0.25, 1.0))
test_fns = st.one_of(bumps, st.builds(PolyMod, st.tuples(st.floats(0.5, 2.0), st.floats(-1.0, 1.0)), bumps))
scalars = st.sampled_from([-2.0, -0.5, 1.0, 1.5, 3.0])


def b(u):
    return math.exp(-1.0 / (1.0 - u * u)) if abs(u) < 1 else 0.0


def quad(fn, lo, hi):
    return sp_integrate.quad(fn, lo, hi, epsabs=1e-13, limit=200)[0]


class TestFormaNormal:

    def test_regular(self):
        """Test: Sin molificadores singulares hay un único término regular"""
        terms = normal_form(gallery.shifted_sine())
        assert len(terms) == 1
        assert terms[0].is_regular

    def test_suma_con_dirac(self):
        """Test: sin(x) + d da un término regular y uno molificado"""
        terms = normal_form(Add(Sin(), make_dirac()))
        assert [t.is_regular for t in terms] == [True, False]

    def test_cuadrado_de_dirac(self):
        """Test: d·d combina las bases en un único molificador"""
        terms = normal_form(Mul(make_dirac(), make_dirac()))
        assert len(terms) == 1
        assert terms[0].mollifier.base == Mul(Bump(), Bump())

    @pytest.mark.parametrize("f", [
        gallery.fast_sine(),
        Sin(make_dirac()),
        Mul(make_dirac(), Mollify(Bump(), EPS * 2, 1.0)),
    ])
    def test_sin_forma_normal(self, f):
        """Test: Oscilaciones infinitas o molificadores dentro de primitivas lanzan UnsupportedForm"""
        with pytest.raises(UnsupportedForm):
            normal_form(f)


class TestPair:

    def test_constante_epsilon(self):
        """Test: ⟨ε, *b⟩ = ε·I_b, infinitesimal"""
        result = pair(gallery.epsilon_constant(), G)
        assert result.status is PairingStatus.INFINITESIMAL
        assert result.value.coefficient(1) == pytest.approx(I_B, abs=1e-9)
        assert result.value.coefficient(0) == 0.0

    def test_estandar(self):
        """Test: ⟨sin, *g⟩ coincide con scipy"""
        g = TestBump(0.5, 1.0)
        expected = quad(lambda x: math.sin(x) * b(x - 0.5), -0.5, 1.5)
        result = pair(Sin(), g)
        assert result.status is PairingStatus.LIMITED
        assert result.form is PairingForm.REGULAR
        assert result.value.standard_part() == pytest.approx(expected, abs=1e-9)

    def test_seno_desplazado(self):
        """Test: ⟨sin(x + ε), *b⟩ = S₀ + C₀·ε − (S₀/2)·ε², con S₀ = 0 por paridad"""
        c0 = quad(lambda x: math.cos(x) * b(x), -1, 1)
        value = pair(gallery.shifted_sine(), G).value
        assert value.coefficient(0) == pytest.approx(0.0, abs=1e-9)
        assert value.coefficient(1) == pytest.approx(c0, abs=1e-9)
        assert value.coefficient(2) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("g", [
        TestBump(0.0, 1.0),
        TestBump(0.3, 0.5),
        PolyMod((1.0, 2.0), TestBump(-0.2, 1.0)),
        Shift(0.4, TestBump(0.0, 2.0)),
    ])
    def test_dirac(self, g):
        """Test: st⟨d, *g⟩ = g(0)"""
        result = pair(make_dirac(), g)
        assert result.status is PairingStatus.LIMITED
        assert result.form is PairingForm.MOLLIFIED
        assert result.value.standard_part() == pytest.approx(float(g.values([0.0])[0]), abs=1e-8)

    def test_dirac_momento_de_orden_dos(self):
        """Test: ⟨d, *b⟩ = b(0) + (m₂/2)·b″(0)·ε² + O(ε⁴) sin término en ε"""
        m2 = quad(lambda u: u * u * b(u), -1, 1) / I_B
        value = pair(make_dirac(), G).value
        assert value.coefficient(1) == pytest.approx(0.0, abs=1e-9)
        assert value.coefficient(2) == pytest.approx(0.5 * m2 * (-2.0 * E_INV), abs=1e-8)

    def test_bump_escalado(self):
        """Test: ⟨(1/ε)·b, *b⟩ no es limitado"""
        result = pair(gallery.scaled_bump(), G)
        assert result.status is PairingStatus.UNLIMITED
        assert result.value.leading_exponent == -1

    def test_escalon_con_corte_infinitesimal(self):
        """Test: ⟨1 si x < ε, *b⟩ = I_b/2 + ε·b(0) + ..."""
        step = gallery.small_step(a=0.0, b=EPS, jump=1.0)
        value = pair(step, G).value
        assert value.coefficient(0) == pytest.approx(I_B / 2, abs=1e-9)
        assert value.coefficient(1) == pytest.approx(E_INV, abs=1e-8)

    def test_indicador_comprimido(self):
        """Test: ⟨k, *b⟩ = 2ε·b(0) + ..., infinitesimal"""
        result = pair(gallery.compressed_indicator(), G)
        assert result.status is PairingStatus.INFINITESIMAL
        assert result.value.coefficient(1) == pytest.approx(2 * E_INV, abs=1e-8)

    def test_erratum_potencia_de_dirac(self):
        """Test: ⟨d², *g⟩ no es limitado: exponente inicial −1"""
        result = pair(Mul(make_dirac(), make_dirac()), G)
        assert result.status is PairingStatus.UNLIMITED
        assert result.value.leading_exponent == -1


class TestLinealidad:

    @pytest.mark.parametrize("f,h", [
        (Sin(), Exp()),
        (gallery.shifted_sine(), Const(EPS) * Var()),
        (make_dirac(), Sin()),
    ])
    def test_aditiva(self, f, h):
        """Test: ⟨f + h, *g⟩ = ⟨f, *g⟩ + ⟨h, *g⟩ coeficiente a coeficiente"""
        g = TestBump(0.2, 1.0)
        total = pair(Add(f, h), g).value
        separate = pair(f, g).value + pair(h, g).value
        for exp in {e for e, _ in total.terms} | {e for e, _ in separate.terms}:
            assert total.coefficient(exp) == pytest.approx(separate.coefficient(exp), abs=1e-9)

    @pytest.mark.parametrize("scalar", [3.0, EPS, 1 / EPS, 2 + EPS])
    def test_escalar_exacto(self, scalar):
        """Test: ⟨λf, *g⟩ = λ·⟨f, *g⟩ exactamente (el escalar se separa antes)"""
        assert pair(Mul(Const(scalar), Sin()), G).value == HyperReal.coerce(scalar) * pair(Sin(), G).value

    def test_negacion(self):
        """Test: ⟨−f, *g⟩ = −⟨f, *g⟩"""
        assert pair(-make_dirac(), G).value == -pair(make_dirac(), G).value

    @settings(max_examples=200, deadline=None)
    @given(regular_exprs, regular_exprs, scalars, test_fns)
    def test_combinacion_lineal_aleatoria(self, f, h, lam, g):
        """Test: ⟨λf + h, *g⟩ = λ⟨f, *g⟩ + ⟨h, *g⟩ coeficiente a coeficiente en 200 instancias REGULAR"""
        total = pair(Add(Mul(Const(lam), f), h), g).value
        separate = pair(f, g).value.scale(lam) + pair(h, g).value
        tol = QUAD_TOL * max(1.0, abs(lam))
        for exp in {e for e, _ in total.terms} | {e for e, _ in separate.terms}:
            assert total.coefficient(exp) == pytest.approx(separate.coefficient(exp), abs=tol)


class TestProductoEnD:

    @settings(max_examples=100, deadline=None)
    @given(test_fns, test_fns)
    def test_simetria(self, g, h):
        """Test: ⟨*g, *h⟩ = ⟨*h, *g⟩"""
        gh = pair(TestRef(g), h).value.standard_part()
        hg = pair(TestRef(h), g).value.standard_part()
        assert gh == pytest.approx(hg, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(test_fns)
    def test_positividad(self, g):
        """Test: ⟨*g, *g⟩ > 0 y coincide con la energía sobre el soporte"""
        norm2 = pair(TestRef(g), g).value.standard_part()
        s = g.support()
        assert norm2 > 0
        assert energy(TestRef(g), s.lo, s.hi).value.standard_part() == pytest.approx(norm2, abs=1e-9)


class TestEnergia:

    def test_seno_desplazado(self):
        """Test: st ∫₀¹ sin²(x + ε) = (1 − sin 2/2)/2"""
        result = energy(gallery.shifted_sine(), 0.0, 1.0)
        assert result.status is PairingStatus.LIMITED
        assert result.value.standard_part() == pytest.approx((1 - math.sin(2.0) / 2) / 2, abs=1e-9)

    def test_dirac(self):
        """Test: ∫₋₁¹ d² = (∫b²/I_b²)·ε⁻¹, no limitado"""
        b2 = quad(lambda u: b(u) ** 2, -1, 1)
        result = energy(make_dirac(), -1.0, 1.0)
        assert result.status is PairingStatus.UNLIMITED
        assert result.value.leading_exponent == -1
        assert result.value.coefficient(-1) == pytest.approx(b2 / I_B ** 2, rel=1e-8)

    def test_dirac_medio_intervalo(self):
        """Test: Con un extremo en el centro del molificador se integra media base"""
        full = energy(make_dirac(), -1.0, 1.0).value.coefficient(-1)
        half = energy(make_dirac(), 0.0, 1.0).value.coefficient(-1)
        assert half == pytest.approx(full / 2, rel=1e-8)

    def test_intervalo_invalido(self):
        """Test: c > d lanza ValueError"""
        with pytest.raises(ValueError):
            energy(Sin(), 1.0, 0.0)

    def test_extremo_a_distancia_no_estandar(self):
        """Test: Un extremo dentro del molificador a distancia no estándar lanza UnsupportedForm"""
        f = Mollify(Bump(), EPS, 1 / EPS, EPS * EPS)
        with pytest.raises(UnsupportedForm):
            energy(f, 0.0, 1.0)


class TestPertenencia:

    @pytest.mark.parametrize("f", [gallery.epsilon_constant(), gallery.shifted_sine(), make_dirac()])
    def test_admitidas(self, f):
        """Test: ε, sin(x + ε) y d pertenecen a T (no refutadas)"""
        result = member_T(f, default_corpus())
        assert result.verdict is MembershipVerdict.ADMITTED
        assert result.witness is None

    def test_dirac_sin_propiedad_ii_limitada(self):
        """Test: d se admite aunque su energía no sea limitada"""
        result = member_T(make_dirac(), [G])
        assert not result.implied_by_ii
        assert {status for _, status in result.energies} == {PairingStatus.UNLIMITED}

    def test_bump_escalado_rechazado(self):
        """Test: (1/ε)·b se rechaza con testigo b"""
        result = member_T(gallery.scaled_bump(), [G])
        assert result.verdict is MembershipVerdict.REJECTED
        assert result.witness == G

    def test_rechazo_por_cuadratura(self):
        """Test: Si la energía no converge se rechaza con el intervalo como testigo"""
        f = Add(TestRef(TestBump(0.0, 0.1)), Const(EPS))
        result = member_T(f, [G], QuadratureConfig(max_subdivisions=1))
        assert result.verdict is MembershipVerdict.REJECTED
        assert result.witness_interval == (-1.0, 1.0)

    def test_corpus_vacio(self):
        """Test: Un corpus vacío lanza ValueError"""
        with pytest.raises(ValueError):
            member_T(Sin(), [])

    def test_corpus_por_defecto(self):
        """Test: 20 bumps más 12 bumps modulados por monomios"""
        corpus = default_corpus()
        assert len(corpus) == 32
        assert sum(isinstance(g, PolyMod) for g in corpus) == 12


class TestSchwarz:

    @pytest.mark.parametrize("f", [Const(1.0), Sin(), gallery.shifted_sine()])
    def test_se_cumple(self, f):
        """Test: st⟨f,*g⟩² ≤ st∫f²·st∫g²"""
        report = schwarz_check(f, G)
        assert report
        assert report.lhs <= report.rhs + 1e-8

    def test_constante_uno(self):
        """Test: (∫b)² ≤ 2·∫b² con los valores de scipy"""
        b2 = quad(lambda u: b(u) ** 2, -1, 1)
        report = schwarz_check(Const(1.0), G)
        assert report.lhs == pytest.approx(I_B ** 2, abs=1e-9)
        assert report.rhs == pytest.approx(2 * b2, abs=1e-9)

    def test_lado_no_limitado(self):
        """Test: Con la energía de d no limitada el informe es falso y lo anota"""
        report = schwarz_check(make_dirac(), G)
        assert not report
        assert report.notes["unlimited"] == ["energy_f"]
