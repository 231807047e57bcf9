import numpy as np
import pytest
from scipy.integrate import quad

from prandtl_lab.errors import GlueSpecError, ParameterError
from prandtl_lab.grid import Field, Grid, build_grid, cumulative_integral, derivative
from prandtl_lab.profiles import (
    Bump,
    GlueSpec,
    Plateau,
    ProfileTable,
    build_profile,
    dg1_exact,
    fit_center_asymptotics,
    fit_edge_asymptotics,
    g1_exact,
    glue,
    inviscid_equation_residual,
    profile_mass,
    profile_residual,
    self_similar_field,
    self_similar_residual,
    support_half_width,
)


@pytest.fixture(scope="module")
def table1():
    return build_profile(1, n=4096, tol=1e-9)


@pytest.fixture(scope="module")
def table2():
    return build_profile(2, n=8192, tol=1e-9)


@pytest.fixture(scope="module")
def table3():
    return build_profile(3, n=8192, tol=1e-9)


class TestG1Exact:
    def test_values(self):
        assert g1_exact(0.0) == 1.0
        assert g1_exact(np.pi) == pytest.approx(0.0, abs=1e-30)
        assert g1_exact(4.0) == 0.0
        assert g1_exact(-4.0) == 0.0

    def test_small_z_expansion(self):
        # cos^2(Z/2) = 1 - Z^2/4 + Z^4/48 + O(Z^6)
        Z = np.array([1e-2, 3e-2, 1e-1])
        approx = 1.0 - Z**2 / 4.0 + Z**4 / 48.0
        assert np.max(np.abs(g1_exact(Z) - approx)) < np.max(Z**6)

    def test_even(self):
        Z = np.linspace(0, np.pi, 50)
        assert np.allclose(g1_exact(Z), g1_exact(-Z))


class TestSupportHalfWidth:
    def test_k1_is_pi(self):
        assert support_half_width(1) == np.pi

    def test_k2_k3_closed_forms(self):
        assert support_half_width(2) == pytest.approx(np.pi * np.sqrt(2.0), rel=1e-15)
        assert support_half_width(3) == pytest.approx(2.0 * np.pi, rel=1e-15)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_against_quadrature_oracle(self, k):
        # independent oracle: the xi-integral, split at 1 and folded by
        # xi -> 1/xi so both halves carry the endpoint singularity at 0
        lower, _ = quad(lambda x: x ** (-(1 - 1 / (2 * k))) / (1 + x), 0.0, 1.0,
                        epsabs=1e-14, epsrel=1e-13)
        upper, _ = quad(lambda t: t ** (-1 / (2 * k)) / (1 + t), 0.0, 1.0,
                        epsabs=1e-14, epsrel=1e-13)
        oracle = lower + upper
        assert abs(support_half_width(k) - oracle) / oracle < 1e-10

    def test_k0_rejected(self):
        with pytest.raises(ParameterError):
            support_half_width(0)


class TestBuildProfile:
    def test_k1_matches_cos_squared(self, table1):
        Z = np.linspace(0.0, np.pi, 20001)
        assert np.max(np.abs(table1.evaluate(Z) - g1_exact(Z))) < 1e-8

    def test_k1_constants(self, table1):
        assert table1.center_coeff == pytest.approx(0.25, rel=1e-14)
        assert table1.edge_coeff == pytest.approx(0.25, rel=1e-14)
        assert table1.edge_exponent == pytest.approx(2.0, rel=1e-14)

    def test_k1_derivative(self, table1):
        Z = np.linspace(0.05, 0.95 * np.pi, 500)
        assert np.max(np.abs(table1.derivative(Z) - dg1_exact(Z))) < 1e-8

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_edge_exponent_formula(self, k, table1, table2, table3):
        t = {1: table1, 2: table2, 3: table3}[k]
        assert t.edge_exponent == pytest.approx(2 * k / (2 * k - 1), rel=1e-14)

    def test_even_and_compact(self, table2):
        Z = np.linspace(0.1, table2.a_k - 0.1, 37)
        assert np.allclose(table2.evaluate(-Z), table2.evaluate(Z))
        assert np.all(table2.evaluate(np.array([table2.a_k + 0.1, 50.0])) == 0.0)

    def test_monotone_decreasing_tabulation(self, table3):
        assert np.all(np.diff(table3.Z_samples) > 0)
        # non-increasing everywhere (1 - G underflows near the center),
        # strictly decreasing once the deficit is representable
        assert np.all(np.diff(table3.G_samples) <= 0)
        rep = table3.G_samples < 1.0 - 1e-14
        assert np.all(np.diff(table3.G_samples[rep]) < 0)
        assert table3.G_samples[0] == 1.0

    def test_strictly_increasing_on_left(self, table2):
        Z = np.linspace(-table2.a_k + 1e-3, -1e-3, 200)
        vals = table2.evaluate(Z)
        assert np.all(np.diff(vals) > 0)

    def test_guards(self):
        with pytest.raises(ParameterError):
            build_profile(0)
        with pytest.raises(ParameterError):
            build_profile(1, n=32)
        with pytest.raises(ParameterError):
            build_profile(1, tol=-1.0)


class TestProfileMass:
    def test_k1(self, table1):
        assert profile_mass(table1) == pytest.approx(np.pi / 2.0, abs=1e-10)

    def test_k2(self, table2):
        assert profile_mass(table2) == pytest.approx(0.75 * np.pi * np.sqrt(2.0),
                                                     abs=1e-7)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_mass_fraction(self, k, table1, table2, table3):
        t = {1: table1, 2: table2, 3: table3}[k]
        frac = profile_mass(t) / t.a_k
        # analytic fraction is 1 - 1/(2k), which sits AT 1/2 for k = 1
        assert 0.5 - 1e-9 < frac < 1.0
        assert frac == pytest.approx(1.0 - 1.0 / (2 * k), abs=1e-6)


class TestProfileResidual:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_small_on_interior(self, k, table1, table2, table3):
        t = {1: table1, 2: table2, 3: table3}[k]
        assert profile_residual(t) < 1e-6

    def test_constant_one_is_solution(self):
        g = build_grid(3.0, 101)
        f = Field(g, np.ones(101))
        assert np.max(np.abs(inviscid_equation_residual(f, 1).values)) < 1e-13

    def test_constant_zero_is_solution(self):
        g = build_grid(3.0, 101)
        f = Field(g, np.zeros(101))
        assert np.max(np.abs(inviscid_equation_residual(f, 1).values)) == 0.0


class TestAsymptoticFits:
    @pytest.mark.parametrize("k", [2, 3])
    def test_center(self, k, table2, table3):
        t = {2: table2, 3: table3}[k]
        slope, coeff = fit_center_asymptotics(t)
        assert abs(slope - 2 * k) / (2 * k) < 0.01
        assert abs(coeff - (2 * k) ** (-2 * k)) / (2 * k) ** (-2 * k) < 0.02

    @pytest.mark.parametrize("k", [2, 3])
    def test_edge(self, k, table2, table3):
        t = {2: table2, 3: table3}[k]
        slope, _ = fit_edge_asymptotics(t)
        want = 2 * k / (2 * k - 1)
        assert abs(slope - want) / want < 0.01

    def test_rescaling_closure(self, table1):
        # G(Z/mu) solves the same stationary equation for any mu > 0
        mu = 1.7
        g = build_grid(0.95 * mu * np.pi, 3001)
        f = Field(g, table1.evaluate(g.nodes / mu))
        assert np.max(np.abs(inviscid_equation_residual(f, 1).values)) < 1e-5


class TestGlue:
    def test_single_bump_is_shifted_g1(self):
        g = build_grid(2.5 * np.pi, 2001)
        out = glue(GlueSpec((Bump(1, 1.0),)), g)
        want = g1_exact(g.nodes - np.pi)
        assert np.max(np.abs(out.values - want)) < 1e-12

    def test_plateau_one_then_falling_bump(self):
        g = build_grid(2.0 + 2.0 * np.pi, 2001)
        out = glue(GlueSpec((Plateau(1, 2.0), Bump(1, 1.0))), g)
        on_plateau = g.nodes <= 2.0
        assert np.all(out.values[on_plateau] == 1.0)
        # falls from 1 to 0 over width pi, then stays 0; continuity means
        # node-to-node jumps bounded by slope * spacing (max slope is 1/2)
        h = g.spacing[0]
        assert np.max(np.abs(np.diff(out.values))) < 0.6 * h
        tail = g.nodes >= 2.0 + np.pi + 1e-9
        assert np.all(out.values[tail] == 0.0)

    def test_bump_scale_doubles_support(self):
        g = build_grid(1.0 + 5.0 * np.pi, 4001)
        out = glue(GlueSpec((Plateau(0, 1.0), Bump(1, 2.0))), g)
        support = g.nodes[out.values > 1e-12]
        length = support[-1] - support[0]
        assert length == pytest.approx(2.0 * np.pi * 2.0, abs=0.02)

    def test_junction_mismatch(self):
        with pytest.raises(GlueSpecError):
            g = build_grid(5.0, 101)
            glue(GlueSpec((Plateau(1, 1.0), Plateau(0, 1.0))), g)

    def test_bad_plateau_value(self):
        with pytest.raises(GlueSpecError):
            GlueSpec((Plateau(2, 1.0),))

    def test_arch_chain_solves_equation_away_from_junctions(self):
        # consecutive full arches anchored at the origin are exact solutions
        g = build_grid(2.0 * np.pi + np.pi + 2.0, 6001)
        out = glue(GlueSpec((Bump(1, 1.0), Bump(1, 0.5))), g)
        res = inviscid_equation_residual(out, 1).values
        junctions = np.array([0.0, 2.0 * np.pi, 3.0 * np.pi])
        dist = np.min(np.abs(g.nodes[:, None] - junctions[None, :]), axis=1)
        assert np.max(np.abs(res[dist > 0.3])) < 5e-3

    def test_rising_half_into_plateau(self):
        g = build_grid(np.pi + 3.0, 2001)
        out = glue(GlueSpec((Bump(1, 1.0), Plateau(1, 2.0))), g)
        after = g.nodes >= np.pi
        assert np.all(out.values[after] == 1.0)
        assert out.values[0] == pytest.approx(0.0, abs=1e-12)


class TestSelfSimilar:
    def test_k1_residual_small(self, table1):
        g = build_grid(10.0, 2001)
        res = self_similar_residual(table1, 1.0, 1.0, 0.5, g, dt=1e-6)
        assert res < 1e-4

    def test_zero_field_residual(self):
        g = build_grid(5.0, 501)
        zero = Field(g, np.zeros(501))
        dpsi = derivative(zero, 1).values
        res = -zero.values**2 + cumulative_integral(zero).values * dpsi
        assert np.max(np.abs(res)) == 0.0

    def test_translation_invariance(self, table1):
        g = build_grid(12.0, 2401)
        r1 = self_similar_residual(table1, 1.0, 1.0, 0.5, g, y_left=0.0)
        r2 = self_similar_residual(table1, 1.0, 3.0, 2.5, g, y_left=0.0)
        r3 = self_similar_residual(table1, 1.0, 1.0, 0.5, g, y_left=2.0)
        # time shift: same values up to rounding of t +/- dt
        assert r2 == pytest.approx(r1, abs=1e-7)
        # space shift: sampling nodes move across the profile, residual
        # magnitude (an FD error estimate) stays the same size
        assert r3 == pytest.approx(r1, rel=0.2)

    def test_blowup_amplitude(self, table1):
        g = build_grid(20.0, 1001)
        psi = self_similar_field(table1, 1.0, 1.0, 0.9, g)
        assert np.max(psi.values) == pytest.approx(10.0, rel=1e-6)
