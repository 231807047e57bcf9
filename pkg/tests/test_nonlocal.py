import math

import numpy as np
import pytest
from scipy.special import i0, iv

from prandtl_lab.errors import ParameterError, QuadratureError
from prandtl_lab.grid import Field, build_grid
from prandtl_lab.nonlocal_model import (
    KernelEvaluator,
    direct_step_nonlocal,
    green_solution,
    integrate_nonlocal,
    kernel,
    kernel_derivative,
    kernel_ode_check,
    kernel_primitive,
    transported_solution,
)


class TestKernel:
    def test_values_at_origin_and_negative(self):
        assert kernel(0.0) == 1.0
        assert kernel(-1.0) == 0.0
        assert kernel(-1e-12) == 0.0

    def test_k_of_one(self):
        # sum of 1/(n!)^2, summed to machine precision
        assert kernel(1.0) == pytest.approx(2.2795853023360673, rel=1e-14)

    def test_against_bessel_oracle(self):
        # independent oracle: k(y) = I0(2 sqrt(y))
        y = np.array([0.1, 0.5, 1.0, 5.0, 37.0, 212.0, 4000.0])
        want = i0(2.0 * np.sqrt(y))
        assert np.max(np.abs(kernel(y) - want) / want) < 1e-13

    def test_log_space_branch(self):
        from scipy.special import ive
        y = 2.0e4
        want = ive(0, 2.0 * math.sqrt(y)) * math.exp(2.0 * math.sqrt(y))
        assert kernel(y) == pytest.approx(want, rel=1e-11)

    def test_sublinear_exponential_growth(self):
        # log k(y) / sqrt(y) stays bounded (tends to 2 from below)
        y = np.linspace(10.0, 100.0, 91)
        ratio = np.log(kernel(y)) / np.sqrt(y)
        assert np.all(ratio > 1.0)
        assert np.all(ratio < 2.0)

    def test_evaluator_truncation_within_tail_bound(self):
        # a looser ratio-test tolerance truncates earlier but the partial
        # sum stays within a few tolerances of the converged value
        tight = kernel(7.0)
        loose = KernelEvaluator(tol=1e-6).kernel(7.0)
        assert loose != tight
        assert abs(loose - tight) <= 10.0 * 1e-6 * tight

    def test_evaluator_guards(self):
        with pytest.raises(ParameterError):
            KernelEvaluator(tol=-1.0)
        with pytest.raises(QuadratureError):
            KernelEvaluator(max_terms=8).kernel(100.0)


class TestKernelPrimitive:
    def test_value_at_origin(self):
        assert kernel_primitive(1, 0.0) == 0.0
        assert kernel_primitive(3, 0.0) == 0.0
        assert kernel_primitive(0, 2.0) == kernel(2.0)

    def test_fd_derivative_recovers_kernel(self):
        h = 1e-5
        for y in (0.5, 2.0, 7.0):
            fd = (kernel_primitive(1, y + h) - kernel_primitive(1, y - h)) / (2 * h)
            assert fd == pytest.approx(kernel(y), abs=1e-8 * kernel(y))

    @pytest.mark.parametrize("i", [1, 2, 3])
    def test_against_bessel_oracle(self, i):
        # k^(-i)(y) = y^(i/2) I_i(2 sqrt(y))
        y = np.array([0.3, 1.0, 4.0, 20.0])
        want = y ** (i / 2.0) * iv(i, 2.0 * np.sqrt(y))
        got = kernel_primitive(i, y)
        assert np.max(np.abs(got - want) / want) < 1e-13

    @pytest.mark.parametrize("i", [1, 2, 4])
    def test_growth_near_origin(self, i):
        # k^(-i)(x) <= (e / i!) x^i on (0, 1]
        x = np.linspace(1e-3, 1.0, 200)
        ratio = kernel_primitive(i, x) / x**i
        assert np.all(ratio <= math.e / math.factorial(i))
        assert np.all(ratio >= 1.0 / math.factorial(i))

    def test_guard(self):
        with pytest.raises(ParameterError):
            kernel_primitive(-1, 1.0)


class TestKernelOde:
    def test_residual_at_one(self):
        assert kernel_ode_check(1.0) <= 1e-12

    def test_relative_residual_at_ten(self):
        assert kernel_ode_check(10.0) / kernel(10.0) <= 1e-12

    def test_vanishes_at_origin(self):
        assert kernel_ode_check(1e-4) < 1e-4
        assert kernel_ode_check(1e-8) < 1e-8

    def test_derivative_series(self):
        h = 1e-6
        fd = (kernel(3.0 + h) - kernel(3.0 - h)) / (2 * h)
        assert kernel_derivative(3.0) == pytest.approx(fd, rel=1e-8)


@pytest.fixture(scope="module")
def x_grid():
    return build_grid(5.0, 801)


class TestGreenSolution:
    def test_step_datum_gives_kernel(self, x_grid):
        u0 = Field(x_grid, np.ones(x_grid.n))
        out = green_solution(u0, 1.0, x_grid)
        assert np.max(np.abs(out.values - kernel(x_grid.nodes))) < 1e-12

    def test_time_zero_identity(self, x_grid):
        u0 = Field(x_grid, np.sin(x_grid.nodes) + 2.0)
        out = green_solution(u0, 0.0, x_grid)
        assert np.max(np.abs(out.values - u0.values)) < 1e-12

    def test_linear_datum_gives_primitive(self, x_grid):
        u0 = Field(x_grid, x_grid.nodes.copy())
        t = 1.3
        out = green_solution(u0, t, x_grid)
        want = kernel_primitive(1, t * x_grid.nodes) / t
        assert np.max(np.abs(out.values - want)) < 1e-8

    def test_scaling_symmetry(self, x_grid):
        # u(lam t, x / lam) solves the problem for the datum u0(x / lam)
        lam, t = 2.0, 0.7
        base = lambda x: np.exp(-((x - 2.0) ** 2))
        u = green_solution(Field(x_grid, base(x_grid.nodes)), lam * t, x_grid)
        w = green_solution(Field(x_grid, base(x_grid.nodes / lam)), t, x_grid)
        xs = x_grid.nodes[x_grid.nodes <= x_grid.y_max / lam]
        got = np.interp(xs * lam, x_grid.nodes, w.values)
        want = np.interp(xs, x_grid.nodes, u.values)
        assert np.max(np.abs(got - want)) < 1e-4


class TestDirectStepping:
    def test_zero_stays_zero(self, x_grid):
        u = Field(x_grid, np.zeros(x_grid.n))
        out = direct_step_nonlocal(u, 1e-2)
        assert np.all(out.values == 0.0)

    def test_step_datum_matches_kernel(self, x_grid):
        u0 = Field(x_grid, np.ones(x_grid.n))
        out = integrate_nonlocal(u0, 1.0, dt=1e-3)
        rel = np.max(np.abs(out.values - kernel(x_grid.nodes))) / kernel(5.0)
        assert rel < 1e-4

    @pytest.mark.parametrize("datum", [
        lambda x: np.ones_like(x),
        lambda x: np.exp(-((x - 2.0) ** 2)),
        lambda x: 1.0 + 0.3 * x**2,
    ])
    def test_oracle_equivalence(self, x_grid, datum):
        u0 = Field(x_grid, datum(x_grid.nodes))
        direct = integrate_nonlocal(u0, 1.0, dt=1e-3)
        ref = green_solution(u0, 1.0, x_grid)
        rel = np.max(np.abs(direct.values - ref.values)) / np.max(np.abs(ref.values))
        assert rel < 1e-4


class TestTransported:
    def test_time_zero_identity(self, x_grid):
        v0 = Field(x_grid, x_grid.nodes**2 * np.exp(-x_grid.nodes))
        out = transported_solution(v0, 0.0)
        assert np.array_equal(out.values, v0.values)

    def test_quadratic_zero_decays_like_exp_minus_2t(self, x_grid):
        # v0(0) = v0'(0) = 0, v0''(0) != 0: compact sup decays like e^(-2t)
        v0 = Field(x_grid, x_grid.nodes**2 * np.exp(-x_grid.nodes))
        ts = np.linspace(2.5, 6.5, 9)
        mask = x_grid.nodes <= 3.0
        sups = [np.max(np.abs(transported_solution(v0, t).values[mask])) for t in ts]
        slope = np.polyfit(ts, np.log(sups), 1)[0]
        assert abs(slope + 2.0) / 2.0 < 0.10

    def test_constant_datum_no_decay(self, x_grid):
        v0 = Field(x_grid, np.ones(x_grid.n))
        mask = x_grid.nodes <= 3.0
        sups = [np.max(np.abs(transported_solution(v0, t).values[mask]))
                for t in (1.0, 3.0, 5.0)]
        # converges to k(3) ~ 6.98 from below; certainly bounded away from 0
        assert min(sups) > 1.0
        assert sups[-1] == pytest.approx(kernel(3.0), rel=0.05)
