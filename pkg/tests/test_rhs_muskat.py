import math

import numpy as np
import pytest

from muskat.grid_spectral import ScalarField, frac_laplacian, make_grid, reflect, sample, shift
from muskat.quadrature import QuadratureSpec
from muskat.rhs_muskat import (
    PhysicalParams,
    TermBreakdown,
    curvature,
    evaluate_rhs,
    rhs_cp0,
    rhs_cp1,
    rhs_nf,
)
from muskat.verify import relative_mismatch

G = make_grid(128)
RULE = QuadratureSpec.for_grid(G)
ZERO = ScalarField.zeros(G)
SURF = PhysicalParams(1.0, 0.0)


def sup(v):
    return float(np.max(np.abs(getattr(v, "values", v))))


@pytest.fixture(scope="module")
def wavy():
    return sample(G, lambda x: 0.2 * np.sin(x) + 0.05 * np.sin(3 * x))


@pytest.fixture(scope="module")
def wavy_nf(wavy):
    return rhs_nf(wavy, 1.0, RULE)


class TestParams:
    @pytest.mark.parametrize("kw", [{"sigma": -1.0}, {"g_rho": math.nan}, {"cp0_prefactor": math.inf}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PhysicalParams(**kw)

    def test_default_prefactor(self):
        assert PhysicalParams().cp0_prefactor == 1 / math.pi


class TestCurvature:
    def test_zero(self):
        assert not np.any(curvature(ZERO).values)

    def test_linearisation(self):
        eps = 1e-4
        f = sample(G, np.sin) * eps
        assert sup(curvature(f).values + f.values) <= 2 * eps**3

    def test_value_at_quarter_period(self):
        f = sample(G, np.sin)
        j = G.n_points // 4  # x = pi/2
        assert curvature(f).values[j] == pytest.approx(-1.0, abs=1e-12)


class TestSlopeForm:
    def test_zero(self):
        assert not np.any(rhs_cp1(ZERO, PhysicalParams(1.0, 1.0), RULE).values)

    @pytest.mark.parametrize("k", range(1, 9))
    def test_linear_response(self, k):
        f = sample(G, lambda x: 1e-6 * np.sin(k * x))
        r = rhs_cp1(f, SURF, RULE)
        assert sup(r.values + k**3 * f.values) <= 0.01 * k**3 * 1e-6

    def test_gravity_constant(self):
        rates = []
        for k in range(1, 9):
            f = sample(G, lambda x: 1e-6 * np.sin(k * x))
            r = rhs_cp1(f, PhysicalParams(0.0, 1.0), RULE)
            rates.append(-float(np.dot(r.values, f.values) / np.dot(f.values, f.values)) / k)
        assert max(abs(c / rates[0] - 1) for c in rates) <= 0.01

    def test_lattice_matches_log_nodes(self, wavy):
        p = PhysicalParams(1.0, 0.7)
        a = rhs_cp1(wavy, p, RULE)
        b = rhs_cp1(wavy, p, RULE, method="log")
        assert relative_mismatch(b, a) < 1e-4

    def test_unknown_method(self, wavy):
        with pytest.raises(ValueError):
            rhs_cp1(wavy, SURF, RULE, method="trapezoid")


class TestCurvatureForm:
    def test_zero(self):
        assert not np.any(rhs_cp0(ZERO, PhysicalParams(1.0, 1.0), RULE).values)

    def test_agrees_with_slope_form(self):
        f = sample(G, lambda x: 0.1 * np.sin(x))
        assert relative_mismatch(rhs_cp0(f, SURF, RULE), rhs_cp1(f, SURF, RULE)) <= 1e-3

    def test_reflection(self, wavy):
        f = wavy + sample(G, lambda x: 0.03 * np.cos(2 * x))
        p = PhysicalParams(1.0, 0.4)
        assert sup(rhs_cp0(reflect(f), p, RULE).values - reflect(rhs_cp0(f, p, RULE)).values) <= 1e-10

    def test_prefactor_scales_linearly(self, wavy):
        a = rhs_cp0(wavy, PhysicalParams(1.0, 0.0, 1.0), RULE)
        b = rhs_cp0(wavy, PhysicalParams(1.0, 0.0, 0.5), RULE)
        assert sup(a.values - 2 * b.values) <= 1e-13 * sup(a)


class TestSevenTermForm:
    def test_sigma_must_be_positive(self, wavy):
        with pytest.raises(ValueError):
            rhs_nf(wavy, 0.0, RULE)

    def test_zero(self):
        tb = rhs_nf(ZERO, 1.0, RULE)
        assert all(not np.any(v.values) for v in tb.terms().values())
        assert not np.any(tb.total.values)

    def test_terms_sum_to_total(self, wavy_nf):
        s = sum(v.values for v in wavy_nf.terms().values())
        assert sup(s - wavy_nf.total.values) <= 1e-14
        assert tuple(wavy_nf.terms()) == TermBreakdown.TERMS

    def test_elliptic_term(self):
        eps = 1e-2
        f = sample(G, np.sin) * eps
        direct = -frac_laplacian(f, 3).values * (1 + (eps * np.cos(G.x)) ** 2) ** -1.5
        assert sup(rhs_nf(f, 1.0, RULE).elliptic.values - direct) <= 1e-10

    def test_equivalence_improves_with_refinement(self, wavy, wavy_nf):
        ref = rhs_cp1(wavy, SURF, RULE)
        m0 = relative_mismatch(wavy_nf.total, ref)
        m1 = relative_mismatch(rhs_nf(wavy, 1.0, RULE.refined(1)).total, ref)
        assert m0 <= 1e-3 and m1 < m0

    def test_closed_form_vs_laguerre(self, wavy, wavy_nf):
        gl = rhs_nf(wavy, 1.0, QuadratureSpec.for_grid(G, laplace_mode="gauss_laguerre"))
        for name, v in wavy_nf.terms().items():
            assert sup(getattr(gl, name).values - v.values) <= 1e-8, name

    def test_dissipation_sign(self):
        rng = np.random.default_rng(4)
        for _ in range(3):
            a = rng.standard_normal(4) * 0.05
            f = sample(G, lambda x: a[0] * np.sin(x) + a[1] * np.cos(2 * x) + a[2] * np.sin(3 * x) + a[3] * np.cos(5 * x))
            ell = rhs_nf(f, 1.0, RULE).elliptic
            assert float(np.dot(frac_laplacian(f, 3).values, ell.values)) <= 0.0

    def test_sigma_scales_terms(self, wavy, wavy_nf):
        tb = rhs_nf(wavy, 2.5, RULE)
        assert sup(tb.total.values - 2.5 * wavy_nf.total.values) <= 1e-12 * sup(tb.total)


@pytest.fixture(scope="module")
def field64():
    g = make_grid(64)
    return sample(g, lambda x: 0.2 * np.sin(x) + 0.05 * np.cos(3 * x) + 0.03 * np.sin(5 * x))


class TestSymmetries:
    FORMS = {
        "cp0": lambda f, p: rhs_cp0(f, p, QuadratureSpec.for_grid(f.grid)),
        "cp1": lambda f, p: rhs_cp1(f, p, QuadratureSpec.for_grid(f.grid)),
        "nf": lambda f, p: evaluate_rhs(f, p, QuadratureSpec.for_grid(f.grid), "nf"),
    }

    @pytest.mark.parametrize("form", FORMS)
    def test_translation(self, form, field64):
        F, p = self.FORMS[form], PhysicalParams(1.0, 0.5)
        r = F(field64, p)
        for a in (field64.grid.h * 3, 0.37):
            assert sup(F(shift(field64, a), p).values - shift(r, a).values) <= 1e-9

    @pytest.mark.parametrize("form", FORMS)
    def test_reflection(self, form, field64):
        F, p = self.FORMS[form], PhysicalParams(1.0, 0.5)
        assert sup(F(reflect(field64), p).values - reflect(F(field64, p)).values) <= 1e-9

    @pytest.mark.parametrize("form", FORMS)
    def test_scaling(self, form, field64):
        # f_2(x) = f(2x)/2 on the half-length grid; rhs(f_2)(x) = 4 rhs(f)(2x)
        F = self.FORMS[form]
        half = ScalarField(make_grid(64, math.pi), field64.values / 2)
        r = F(field64, SURF)
        assert sup(F(half, SURF).values - 4 * r.values) <= 1e-6 * sup(r)

    def test_evaluate_rhs_rejects_unknown(self, field64):
        with pytest.raises(ValueError):
            evaluate_rhs(field64, SURF, None, "cp2")
