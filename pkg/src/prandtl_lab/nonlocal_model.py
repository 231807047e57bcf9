"""Exactly solvable nonlocal toy problem and its Green kernel.

The pure integral evolution  d_t u(t,x) = int_0^x u(t, x') dx'  on x >= 0
has a scale-invariant Green function K(t,x) = k(tx) for a step initial
datum, where

    k(y) = sum_n y^n / (n!)^2   (y >= 0),   k(y) = 0  (y < 0),

the unique solution with k(0) = 1 of the ODE  y k'(y) = int_0^y k.
Any solution is then the convolution

    u(t,x) = u0(0) k(tx) + int_0^x u0'(y) k(t(x-y)) dy,

and the i-th primitive k^(-i)(y) = sum_n y^(n+i) / (n! (n+i)!) enters when
initial data vanish to high order at the origin. The transported variant
d_t v - int_0^x v + x d_x v = 0 reduces to the same problem through
s = e^t, x -> x e^{-t}; cancellations of v0 at the origin then translate
into e^{-ell t} decay on compact sets.

Series are summed with a ratio-test cutoff; above y = 1e4 the terms are
accumulated in log space to dodge overflow (the sum itself grows like
e^(2 sqrt(y))).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError, QuadratureError
from .grid import Field, Grid, cumulative_integral, derivative

_SERIES_TOL = 1e-15
_MAX_TERMS = 400
_LOG_SPACE_THRESHOLD = 1.0e4


class KernelEvaluator:
    """Series evaluation policy: ratio-test truncation at `tol`, at most
    `max_terms` terms, log-space accumulation above the overflow guard."""

    def __init__(self, tol: float = _SERIES_TOL, max_terms: int = _MAX_TERMS):
        if tol <= 0.0 or max_terms < 8:
            raise ParameterError("need tol > 0 and max_terms >= 8")
        self.tol = tol
        self.max_terms = max_terms

    def kernel(self, y):
        return kernel(y, tol=self.tol, max_terms=self.max_terms)

    def primitive(self, i, y):
        return kernel_primitive(i, y, tol=self.tol, max_terms=self.max_terms)

    def derivative(self, y):
        return kernel_derivative(y)


def _kernel_series(y: np.ndarray, i_prim: int, tol: float = _SERIES_TOL,
                   max_terms: int = _MAX_TERMS) -> np.ndarray:
    """sum_n y^(n + i_prim) / (n! (n + i_prim)!) by term recurrence."""
    out = np.zeros_like(y)
    pos = y > 0.0
    if i_prim == 0:
        out[~pos & (y == 0.0)] = 1.0
    yp = y[pos]
    term = yp ** i_prim / math.factorial(i_prim)
    total = term.copy()
    converged = np.zeros(yp.shape, dtype=bool)
    for n in range(max_terms):
        term = term * yp / ((n + 1.0) * (n + 1.0 + i_prim))
        total += term
        converged |= term <= tol * total
        if np.all(converged):
            break
    else:
        raise QuadratureError("kernel series did not converge")
    out[pos] = total
    return out


def _kernel_log_space(y: float, i_prim: int) -> float:
    """log-sum-exp evaluation for large arguments (terms overflow floats)."""
    ly = math.log(y)
    # peak term near n = sqrt(y); scan a generous window around it
    n_peak = int(math.sqrt(y))
    span = max(20 * int(y ** 0.25), 50)
    n = np.arange(max(0, n_peak - span), n_peak + span + 1, dtype=float)
    logs = ((n + i_prim) * ly
            - np.array([math.lgamma(v + 1.0) for v in n])
            - np.array([math.lgamma(v + 1.0 + i_prim) for v in n]))
    m = np.max(logs)
    return float(math.exp(m) * np.sum(np.exp(logs - m)))


def kernel(y, tol: float = _SERIES_TOL, max_terms: int = _MAX_TERMS
           ) -> np.ndarray | float:
    """k(y) = sum y^n / (n!)^2 for y >= 0, zero for y < 0."""
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros_like(arr)
    small = (arr >= 0.0) & (arr <= _LOG_SPACE_THRESHOLD)
    out[small] = _kernel_series(arr[small], 0, tol, max_terms)
    for idx in np.nonzero(arr > _LOG_SPACE_THRESHOLD)[0]:
        out[idx] = _kernel_log_space(float(arr[idx]), 0)
    return out if np.ndim(y) else float(out[0])


def kernel_primitive(i: int, y, tol: float = _SERIES_TOL,
                     max_terms: int = _MAX_TERMS) -> np.ndarray | float:
    """i-th primitive of the kernel with 0 as the integration origin.

    Term-wise integration gives k^(-i)(y) = sum_n y^(n+i) / (n! (n+i)!).
    """
    if int(i) != i or i < 0:
        raise ParameterError("primitive order must be a nonnegative integer")
    i = int(i)
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros_like(arr)
    small = (arr >= 0.0) & (arr <= _LOG_SPACE_THRESHOLD)
    out[small] = _kernel_series(arr[small], i, tol, max_terms)
    for idx in np.nonzero(arr > _LOG_SPACE_THRESHOLD)[0]:
        out[idx] = _kernel_log_space(float(arr[idx]), i)
    return out if np.ndim(y) else float(out[0])


def kernel_derivative(y) -> np.ndarray | float:
    """k'(y) = sum_n y^n / (n! (n+1)!) (term-wise differentiated series)."""
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros_like(arr)
    pos = arr >= 0.0
    if np.any(pos):
        sub = arr[pos]
        small = sub <= _LOG_SPACE_THRESHOLD
        vals = np.zeros_like(sub)
        term = np.ones(np.count_nonzero(small))
        total = term.copy()
        ys = sub[small]
        for n in range(_MAX_TERMS):
            term = term * ys / ((n + 1.0) * (n + 2.0))
            total += term
            if np.all(term <= _SERIES_TOL * total):
                break
        else:
            raise QuadratureError("kernel derivative series did not converge")
        vals[small] = total
        for idx in np.nonzero(~small)[0]:
            # d/dy of k is the (i=1 primitive)-shifted series divided by y
            vals[idx] = _kernel_log_space(float(sub[idx]), 1) / float(sub[idx])
        out[pos] = vals
    return out if np.ndim(y) else float(out[0])


def kernel_ode_check(y: float) -> float:
    """Residual |y k'(y) - k^(-1)(y)| of the defining ODE."""
    if y <= 0.0:
        raise ParameterError("the ODE check needs y > 0")
    return abs(y * kernel_derivative(y) - kernel_primitive(1, y))


def _kernel_convolution(value0: float, dv: np.ndarray, y: np.ndarray,
                        xq: np.ndarray, t_factor: float) -> np.ndarray:
    """value0 k(t x) + int_0^x dv(y') k(t (x - y')) dy' at each x in xq.

    Product integration: dv is taken piecewise linear on its grid and the
    kernel factor is integrated exactly through its primitives, so linear
    initial data incur no quadrature error at all.
    """
    if t_factor == 0.0:
        # k == 1: the convolution telescopes to v(x) - v(0)
        panel = 0.5 * np.diff(y) * (dv[1:] + dv[:-1])
        prim = np.concatenate([[0.0], np.cumsum(panel)])
        return value0 + np.interp(xq, y, prim)

    t = t_factor
    slope = np.diff(dv) / np.diff(y)
    # per panel [y_j, y_{j+1}] clipped at x: tau runs from x-b down to x-a
    tau_a = np.maximum(xq[:, None] - y[None, :-1], 0.0)
    tau_b = np.maximum(xq[:, None] - y[None, 1:], 0.0)
    p1a = kernel_primitive(1, t * tau_a)
    p1b = kernel_primitive(1, t * tau_b)
    p2a = kernel_primitive(2, t * tau_a)
    p2b = kernel_primitive(2, t * tau_b)
    c0 = dv[None, :-1]
    c1 = slope[None, :]
    ints = ((c0 + c1 * tau_a) * (p1a - p1b) / t
            - c1 * ((tau_a * p1a - tau_b * p1b) / t - (p2a - p2b) / t**2))
    return value0 * kernel(t * xq) + np.sum(ints, axis=1)


def green_solution(u0: Field, t: float, x_grid: Grid) -> Field:
    """Convolution solution u(t,x) = u0(0) k(tx) + int_0^x u0'(y) k(t(x-y)) dy,
    with the discrete derivative of the initial datum."""
    if t < 0.0:
        raise ParameterError("need t >= 0")
    y = u0.grid.nodes
    if y[0] != 0.0:
        raise ParameterError("initial datum must start at x = 0")
    if x_grid.y_max > u0.grid.y_max + 1e-12:
        raise ParameterError("x_grid extends beyond the initial datum")
    if t == 0.0:
        return Field(x_grid, np.interp(x_grid.nodes, y, u0.values))
    du = derivative(u0, 1).values
    vals = _kernel_convolution(float(u0.values[0]), du, y, x_grid.nodes, t)
    return Field(x_grid, vals)


def direct_step_nonlocal(state: Field, dt: float) -> Field:
    """One explicit midpoint (RK2) step of d_t u = int_0^x u."""
    k1 = cumulative_integral(state).values
    mid = state.with_values(state.values + 0.5 * dt * k1)
    k2 = cumulative_integral(mid).values
    return state.with_values(state.values + dt * k2)


def integrate_nonlocal(u0: Field, t: float, dt: float = 1e-3) -> Field:
    """March d_t u = int_0^x u from u0 to time t with RK2 steps."""
    steps = int(np.ceil(t / dt))
    u = u0
    for _ in range(steps):
        u = direct_step_nonlocal(u, t / steps)
    return u


def transported_solution(v0: Field, t: float) -> Field:
    """Solution of  v_t - int_0^x v + x v_x = 0  with v(0, .) = v0.

    Conjugation: with s = e^t and y = x e^{-t}, u(s, y) = v(t, x) solves the
    plain nonlocal problem; the data time is fixed at s = 1 so t = 0 is the
    identity. Evaluated through the Green kernel."""
    if t < 0.0:
        raise ParameterError("need t >= 0")
    x = v0.grid.nodes
    if x[0] != 0.0:
        raise ParameterError("initial datum must start at x = 0")
    if t == 0.0:
        return v0
    dv = derivative(v0, 1).values
    xq = x * math.exp(-t)  # all within the original grid
    vals = _kernel_convolution(float(v0.values[0]), dv, x, xq, math.exp(t) - 1.0)
    return Field(v0.grid, vals)
