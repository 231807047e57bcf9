import math

import numpy as np
import pytest

from prandtl_lab.errors import ParameterError
from prandtl_lab.grid import Field, Grid
from prandtl_lab.spectral import (
    HermiteFrame,
    apply_L,
    eigen_residual,
    eigenvalue,
    hermite,
    hermite_norm_sq,
    poincare_check,
    rho,
    spectral_gap_check,
)


@pytest.fixture(scope="module")
def frame():
    return HermiteFrame()


def hermite_by_recurrence(i, Y):
    """Independent oracle: h_{n+1} = sqrt(3) Y h_n - 2 n h_{n-1}."""
    hm, h = np.ones_like(Y), math.sqrt(3.0) * Y
    if i == 0:
        return hm
    for n in range(1, i):
        hm, h = h, math.sqrt(3.0) * Y * h - 2.0 * n * hm
    return h


def y_field(lo, hi, n, fn):
    Y = np.linspace(lo, hi, n)
    return Field(Grid(Y), fn(Y))


class TestRho:
    def test_value_at_origin(self):
        assert rho(0.0) == pytest.approx(0.5 * math.sqrt(3.0 / math.pi), rel=1e-15)
        assert rho(0.0) == pytest.approx(0.4886, abs=5e-5)

    def test_even(self):
        assert rho(2.0) == rho(-2.0)

    def test_normalized(self, frame):
        total = frame.inner_product_rho(lambda Y: np.ones_like(Y),
                                        lambda Y: np.ones_like(Y))
        assert total == pytest.approx(1.0, abs=1e-13)


class TestHermite:
    def test_low_order_closed_forms(self):
        Y = np.linspace(-3, 3, 41)
        assert np.allclose(hermite(0, Y), 1.0)
        assert np.allclose(hermite(1, Y), math.sqrt(3.0) * Y)
        assert np.allclose(hermite(2, Y), 3.0 * Y**2 - 2.0)

    def test_norms(self, frame):
        for i, want in ((0, 1.0), (1, 2.0), (2, 8.0)):
            assert frame.hermite_norm_sq_quadrature(i) == pytest.approx(want, abs=1e-8)

    def test_norm_formula(self, frame):
        for i in range(8):
            got = frame.hermite_norm_sq_quadrature(i)
            assert got == pytest.approx(hermite_norm_sq(i), rel=1e-12)

    @pytest.mark.parametrize("i", [3, 5, 8, 12])
    def test_sum_formula_matches_recurrence(self, i):
        Y = np.linspace(-4.0, 4.0, 101)
        assert np.allclose(hermite(i, Y), hermite_by_recurrence(i, Y), rtol=1e-12)

    def test_h3_at_one(self):
        assert hermite(3, 1.0) == pytest.approx(
            float(hermite_by_recurrence(3, np.array([1.0]))[0]), rel=1e-14)

    def test_index_guard(self):
        with pytest.raises(ParameterError):
            hermite(-1, 0.0)
        with pytest.raises(ParameterError):
            hermite(65, 0.0)


class TestInnerProduct:
    def test_orthogonality(self, frame):
        for i in range(6):
            for j in range(i):
                ip = frame.inner_product_rho(lambda Y, i=i: hermite(i, Y),
                                             lambda Y, j=j: hermite(j, Y))
                assert abs(ip) < 1e-10

    def test_parity_h1_h2(self, frame):
        ip = frame.inner_product_rho(lambda Y: hermite(1, Y),
                                     lambda Y: hermite(2, Y))
        assert abs(ip) < 1e-13

    def test_half_line_h0(self, frame):
        ip = frame.inner_product_rho(lambda Y: np.ones_like(Y),
                                     lambda Y: np.ones_like(Y), Y0=0.0)
        assert ip == pytest.approx(0.5, abs=1e-13)

    def test_quadrature_refinement_stable(self):
        coarse = HermiteFrame(n_quad=96)
        fine = HermiteFrame(n_quad=192)
        f = lambda Y: hermite(6, Y)
        g = lambda Y: hermite(6, Y)
        assert abs(coarse.inner_product_rho(f, g)
                   - fine.inner_product_rho(f, g)) < 1e-10

    def test_field_inputs(self, frame):
        f = y_field(-10, 10, 4001, lambda Y: hermite(2, Y))
        assert frame.inner_product_rho(f, f) == pytest.approx(8.0, rel=1e-8)

    def test_mismatched_grids_rejected(self, frame):
        f = y_field(-10, 10, 4001, lambda Y: hermite(2, Y))
        g = y_field(-10, 10, 2001, lambda Y: hermite(2, Y))
        with pytest.raises(ParameterError):
            frame.inner_product_rho(f, g)


class TestApplyL:
    @pytest.mark.parametrize("i", [0, 1, 2])
    def test_low_eigenfunctions(self, i):
        f = y_field(-6, 6, 6001, lambda Y: hermite(i, Y))
        out = apply_L(f)
        want = eigenvalue(i) * f.values
        scale = np.max(np.abs(f.values))
        assert np.max(np.abs(out.values - want)) / scale < 1e-5

    @pytest.mark.parametrize("i", list(range(7)))
    def test_eigen_residual(self, i):
        assert eigen_residual(i) < 1e-4


class TestProjection:
    def test_h1_projects_to_zero(self, frame):
        f = y_field(-12, 12, 8001, lambda Y: hermite(1, Y))
        out = frame.project_off_low_modes(f)
        assert np.max(np.abs(out.values)) / np.max(np.abs(f.values)) < 1e-9

    def test_h3_unchanged(self, frame):
        f = y_field(-12, 12, 8001, lambda Y: hermite(3, Y))
        out = frame.project_off_low_modes(f)
        assert np.max(np.abs(out.values - f.values)) / np.max(np.abs(f.values)) < 1e-9

    def test_mixture_keeps_high_mode(self, frame):
        f = y_field(-12, 12, 8001, lambda Y: hermite(0, Y) + hermite(4, Y))
        out = frame.project_off_low_modes(f)
        want = hermite(4, f.grid.nodes)
        assert np.max(np.abs(out.values - want)) / np.max(np.abs(want)) < 1e-8

    def test_output_orthogonal(self, frame):
        rng = np.random.default_rng(3)
        Y = np.linspace(-12, 12, 6001)
        vals = sum(c * hermite(i, Y) / hermite_norm_sq(i) ** 0.5
                   for i, c in enumerate(rng.normal(size=7)))
        out = frame.project_off_low_modes(Field(Grid(Y), vals))
        for c in frame.low_mode_coefficients(out):
            assert abs(c) < 1e-10


def random_band_limited(rng, n_modes=9, half_width=8.0, n=4001):
    Y = np.linspace(-half_width, half_width, n)
    coeffs = rng.normal(size=n_modes)
    vals = sum(c * hermite(i, Y) / hermite_norm_sq(i) ** 0.5
               for i, c in enumerate(coeffs))
    return Field(Grid(Y), vals)


class TestPoincare:
    def test_constant_field(self):
        # identity case: int Y^2 e^{-Y^2/4} = 2 int e^{-Y^2/4} (variance 2),
        # so lhs is half of rhs = 4 int e^{-Y^2/4}
        f = y_field(-16, 16, 3201, lambda Y: np.ones_like(Y))
        lhs, rhs = poincare_check(f)
        assert lhs == pytest.approx(4.0 * math.sqrt(math.pi), rel=1e-10)
        assert rhs == pytest.approx(8.0 * math.sqrt(math.pi), rel=1e-10)
        assert lhs <= rhs

    def test_h1(self):
        f = y_field(-16, 16, 3201, lambda Y: hermite(1, Y))
        lhs, rhs = poincare_check(f)
        assert lhs <= rhs

    def test_hundred_random_fields(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            f = random_band_limited(rng, half_width=16.0, n=3201)
            lhs, rhs = poincare_check(f)
            assert lhs <= rhs


class TestSpectralGap:
    def test_h3_saturates(self, frame):
        f = y_field(-10, 10, 8001, lambda Y: hermite(3, Y))
        lhs, rhs = spectral_gap_check(f, frame)
        assert lhs == pytest.approx(rhs, rel=1e-6)
        # Dirichlet-form ratio 3i/2 at i = 3
        assert lhs / (rhs / 4.5) == pytest.approx(4.5, rel=1e-6)

    def test_h4_ratio_six(self, frame):
        f = y_field(-10, 10, 8001, lambda Y: hermite(4, Y))
        lhs, rhs = spectral_gap_check(f, frame)
        assert lhs / (rhs / 4.5) == pytest.approx(6.0, rel=1e-6)
        assert lhs >= rhs

    def test_hundred_random_fields(self, frame):
        rng = np.random.default_rng(4)
        for _ in range(100):
            f = random_band_limited(rng)
            lhs, rhs = spectral_gap_check(f, frame)
            assert lhs >= rhs * (1.0 - 1e-6)
