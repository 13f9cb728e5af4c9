"""
Tests para el cálculo de funcionales generalizados

Para ejecutar: pytest test/test_functional.py -v
"""

import math

import numpy as np
import pytest

from hyperdist import gallery
from hyperdist.config import HyperDistConfig
from hyperdist.continuity import VerdictKind, shadow
from hyperdist.errors import (NotAdmitted, NotLimited, NotSContinuousHere, NotShadowable, NotStandardSmooth, OrderCap,
                              UnsupportedEvaluation)
from hyperdist.fn_ast import Const, Cos, Exp, Mul, Recip, Sin, Var, derivative_tree, make_dirac
from hyperdist.functional import (DiagnosticVerdict, EquivalenceKind, GenFunctional, apply, customary_product,
                                  derivative, equivalent, in_T0, make_functional, schwarz_class_diagnostic,
                                  shadow_equivalence, sum_at, trends_to_zero, value_at)
from hyperdist.hyperreal import HyperReal
from hyperdist.legendre import polynomial_expr
from hyperdist.pairing import default_corpus
from hyperdist.testfn import Bump as TestBump
from hyperdist.testfn import PolyMod, deriv_eval

EPS = HyperReal.epsilon()
E_INV = math.exp(-1.0)
G = TestBump(0.0, 1.0)
SMALL = [G, TestBump(1.0, 0.5)]
LEIBNIZ_FACTORS = [(0.0, 1.0), (1.0, 0.0, 1.0), (2.0, -1.0, 0.5), (0.0, 0.0, 0.0, 1.0)]
LEIBNIZ_REPS = [make_dirac(), gallery.shifted_sine(), Cos(), Exp(), Mul(Var(), Sin())]


@pytest.fixture(scope="module")
def delta():
    return make_functional(make_dirac(), "δ", corpus=SMALL)


class TestConstruccion:

    def test_admitido(self, delta):
        """Test: El funcional guarda el veredicto de pertenencia"""
        assert delta.deriv_order == 0
        assert delta.label == "δ"
        assert delta.membership is not None

    def test_rechazado(self):
        """Test: (1/ε)·b no construye funcional"""
        with pytest.raises(NotAdmitted) as exc_info:
            make_functional(gallery.scaled_bump(), corpus=[G])
        assert exc_info.value.code == "NotAdmitted"

    def test_orden_negativo(self):
        """Test: deriv_order < 0 lanza ValueError"""
        with pytest.raises(ValueError):
            GenFunctional(Sin(), -1)


class TestAplicar:

    @pytest.mark.parametrize("g", [G, TestBump(0.3, 0.5), PolyMod((2.0, 1.0), TestBump(0.0, 1.5))])
    def test_dirac(self, delta, g):
        """Test: δ[g] = g(0)"""
        assert apply(delta, g) == pytest.approx(deriv_eval(g, 0, 0.0), abs=1e-8)

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_dirac_sobre_el_corpus(self, delta, k):
        """Test: δ^(k)[g] = (−1)^k · g^(k)(0) para los 20 bumps del corpus por defecto"""
        F = delta
        for _ in range(k):
            F = derivative(F)
        tol = 1e-8 if k == 0 else 1e-6
        for g in default_corpus()[:20]:
            assert apply(F, g) == pytest.approx((-1) ** k * deriv_eval(g, k, 0.0), abs=tol)

    def test_llamada(self, delta):
        """Test: F(g) equivale a apply(F, g)"""
        assert delta(G) == apply(delta, G)

    def test_funcion_regular(self):
        """Test: Un representante estándar da la integral clásica"""
        F = make_functional(Const(1.0), corpus=[G])
        assert F(G) == pytest.approx(0.443993816168079, abs=1e-9)

    def test_no_limitado(self):
        """Test: Un representante no admitido construido a mano lanza NotLimited al aplicarse"""
        with pytest.raises(NotLimited):
            apply(GenFunctional(gallery.scaled_bump()), G)


class TestDerivadas:

    def test_derivada_de_dirac_en_t_por_bump(self, delta):
        """Test: δ′[t·b] = −(t·b)′(0) = −e⁻¹"""
        g = PolyMod((0.0, 1.0), G)
        assert apply(derivative(delta), g) == pytest.approx(-E_INV, abs=1e-8)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_derivadas_de_dirac(self, delta, k):
        """Test: δ^(k)[g] = (−1)^k · g^(k)(0)"""
        g = TestBump(0.3, 1.0)
        F = delta
        for _ in range(k):
            F = derivative(F)
        assert F.deriv_order == k
        assert apply(F, g) == pytest.approx((-1) ** k * deriv_eval(g, k, 0.0), abs=1e-6)

    def test_derivada_de_funcion_regular(self):
        """Test: La derivada de sin actúa como cos"""
        g = TestBump(0.5, 1.0)
        F = make_functional(Sin(), corpus=[G])
        C = make_functional(Cos(), corpus=[G])
        assert apply(derivative(F), g) == pytest.approx(apply(C, g), abs=1e-9)

    def test_etiqueta(self, delta):
        """Test: Cada derivada añade una prima a la etiqueta"""
        assert derivative(derivative(delta)).label == "δ''"

    def test_limite_de_orden(self, delta):
        """Test: Superar deriv_cap lanza OrderCap"""
        cfg = HyperDistConfig(deriv_cap=1)
        with pytest.raises(OrderCap):
            derivative(derivative(delta, cfg), cfg)


class TestProductoUsual:

    def test_coseno_por_dirac(self, delta):
        """Test: (cos·δ)[g] = g(0)"""
        g = TestBump(0.2, 1.0)
        P = customary_product(Cos(), delta, corpus=SMALL)
        assert P(g) == pytest.approx(deriv_eval(g, 0, 0.0), abs=1e-8)

    def test_regla_de_leibniz(self, delta):
        """Test: (x·δ)′ = δ + x·δ′ evaluado en g"""
        g = TestBump(0.3, 1.0)
        P = customary_product(Var(), delta, corpus=SMALL)
        lhs = apply(derivative(P), g)
        rhs = apply(delta, g) + apply(derivative(delta), PolyMod((0.0, 1.0), g))
        assert lhs == pytest.approx(rhs, abs=1e-7)
        assert lhs == pytest.approx(0.0, abs=1e-7)

    @pytest.mark.parametrize("coeffs", LEIBNIZ_FACTORS)
    @pytest.mark.parametrize("rep", LEIBNIZ_REPS, ids=str)
    def test_regla_de_leibniz_en_pares(self, coeffs, rep):
        """Test: (ψ·F)′ = ψ′·F + ψ·F′ con ψ polinómica, sobre 20 pares"""
        psi = polynomial_expr(np.array(coeffs))
        g = TestBump(0.3, 1.0)
        F = make_functional(rep, corpus=SMALL)
        lhs = apply(derivative(customary_product(psi, F, corpus=SMALL)), g)
        rhs = apply(customary_product(derivative_tree(psi), F, corpus=SMALL), g) \
            + apply(derivative(F), PolyMod(coeffs, g))
        assert lhs == pytest.approx(rhs, abs=1e-7)

    @pytest.mark.parametrize("factor", [gallery.small_step(), Recip(Var()), gallery.shifted_sine()])
    def test_factor_no_suave(self, delta, factor):
        """Test: Factores no estándar o no suaves lanzan NotStandardSmooth"""
        with pytest.raises(NotStandardSmooth):
            customary_product(factor, delta, corpus=SMALL)

    def test_funcional_derivado(self, delta):
        """Test: El producto no se define para derivadas"""
        with pytest.raises(NotStandardSmooth):
            customary_product(Sin(), derivative(delta), corpus=SMALL)


class TestEquivalencia:

    def test_constante_uno_distinta(self):
        """Test: 1 ∉ T₀ con el primer bump del corpus como testigo"""
        verdict = in_T0(Const(1.0))
        assert verdict.kind is EquivalenceKind.DISTINCT
        assert verdict.witness == TestBump(-2.0, 0.25)
        assert not verdict

    def test_constante_epsilon(self):
        """Test: ε ∈ T₀ (no refutado)"""
        verdict = in_T0(gallery.epsilon_constant())
        assert verdict.kind is EquivalenceKind.EQUIVALENT_NOT_REFUTED
        assert verdict
        assert verdict.to_dict()["witness"] is None

    def test_seno_desplazado_equivale_a_seno(self):
        """Test: sin(x + ε) ~ sin(x)"""
        assert equivalent(gallery.shifted_sine(), Sin(), SMALL)

    def test_dirac_no_equivale_a_cero(self):
        """Test: d no es equivalente a 0"""
        verdict = equivalent(make_dirac(), Const(0.0), SMALL)
        assert verdict.kind is EquivalenceKind.DISTINCT
        assert verdict.witness == G

    def test_representante_no_admitido(self):
        """Test: in_T0 y equivalent exigen representantes en T"""
        with pytest.raises(NotAdmitted):
            in_T0(gallery.scaled_bump(), [G])
        with pytest.raises(NotAdmitted):
            equivalent(Sin(), gallery.scaled_bump(), [G])
        with pytest.raises(NotAdmitted):
            equivalent(gallery.scaled_bump(), Sin(), [G])

    def test_sombra_equivalente(self):
        """Test: La sombra de sin(x + ε) es equivalente al representante"""
        result = shadow(gallery.shifted_sine(), [0.0, 0.5, 1.0])
        assert shadow_equivalence(gallery.shifted_sine(), result, SMALL)

    def test_sombra_en_tabla(self):
        """Test: Una sombra solo en tabla no se puede comparar"""
        result = shadow(gallery.compressed_indicator(), [0.5, 1.0])
        with pytest.raises(NotShadowable):
            shadow_equivalence(gallery.compressed_indicator(), result, SMALL)


class TestValoresPuntuales:

    def test_seno_desplazado(self):
        """Test: El valor en 0.5 es sin(0.5) con S-continuidad demostrada"""
        F = make_functional(gallery.shifted_sine(), corpus=[G])
        point = value_at(F, 0.5)
        assert point.value == pytest.approx(math.sin(0.5), abs=1e-12)
        assert point.s_continuity_evidence.kind is VerdictKind.PROVED

    def test_escalon_infinitesimal(self):
        """Test: El escalón con salto ε tiene valor puntual en su corte"""
        F = make_functional(gallery.small_step(a=1.0, b=0.0), corpus=[G])
        assert value_at(F, 0.0).value == pytest.approx(1.0)

    @pytest.mark.parametrize("rep", [make_dirac(), gallery.compressed_indicator()])
    def test_sin_s_continuidad(self, rep):
        """Test: δ y el indicador comprimido no tienen valor en 0"""
        with pytest.raises(NotSContinuousHere):
            value_at(GenFunctional(rep), 0.0)

    def test_valor_no_limitado(self):
        """Test: Un representante S-continuo pero infinito lanza NotLimited"""
        with pytest.raises(NotLimited):
            value_at(GenFunctional(Const(1 / EPS)), 0.0)

    def test_derivada_sin_valor_puntual(self, delta):
        """Test: Las derivadas no tienen valores puntuales"""
        with pytest.raises(UnsupportedEvaluation):
            value_at(derivative(delta), 0.0)

    def test_suma_y_resta(self):
        """Test: (F ± G)(p) = F(p) ± G(p)"""
        F = GenFunctional(gallery.shifted_sine(), label="f")
        H = GenFunctional(Exp(), label="h")
        assert sum_at(F, H, 0.5).value == pytest.approx(math.sin(0.5) + math.exp(0.5), abs=1e-12)
        assert sum_at(F, H, 0.5, sign=-1).value == pytest.approx(math.sin(0.5) - math.exp(0.5), abs=1e-12)

    def test_signo_invalido(self):
        """Test: sign distinto de ±1 lanza ValueError"""
        with pytest.raises(ValueError):
            sum_at(GenFunctional(Sin()), GenFunctional(Sin()), 0.0, sign=0)


class TestDiagnosticoDeSchwarz:

    @pytest.mark.parametrize("values,expected", [
        ([1 / n for n in range(1, 11)], True),
        ([0.0] * 5, True),
        ([1.0] * 10, False),
        ([float(n) for n in range(1, 11)], False),
        ([1.0, 0.5, 1e-6, 1e-7], True),
    ])
    def test_tendencia_a_cero(self, values, expected):
        """Test: Heurística sobre prefijos finitos"""
        assert trends_to_zero(values) is expected

    def test_tendencia_vacia(self):
        """Test: Una sucesión vacía lanza ValueError"""
        with pytest.raises(ValueError):
            trends_to_zero([])

    def test_dirac_consistente(self, delta):
        """Test: g_n = b/n da δ[g_n] = e⁻¹/n → 0"""
        seq = [(1.0 / n) * G for n in range(1, 11)]
        diagnostic = schwarz_class_diagnostic(delta, seq)
        assert diagnostic.verdict is DiagnosticVerdict.CONSISTENT
        assert diagnostic.precondition_ok
        assert diagnostic.trend[0] == pytest.approx(E_INV, abs=1e-8)
        assert diagnostic.trend[-1] == pytest.approx(E_INV / 10, abs=1e-8)

    def test_sucesion_que_no_decae(self, delta):
        """Test: Sin decaimiento en las seminormas la precondición falla"""
        diagnostic = schwarz_class_diagnostic(delta, [G] * 6)
        assert diagnostic.verdict is DiagnosticVerdict.INCONSISTENT
        assert not diagnostic.precondition_ok

    def test_prefijo(self, delta):
        """Test: n_max recorta la sucesión"""
        seq = [(1.0 / n) * G for n in range(1, 11)]
        assert len(schwarz_class_diagnostic(delta, seq, n_max=4).trend) == 4

    def test_sucesion_vacia(self, delta):
        """Test: Una sucesión vacía lanza ValueError"""
        with pytest.raises(ValueError):
            schwarz_class_diagnostic(delta, [])
