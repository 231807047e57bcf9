"""Linear machinery of the parabolic frame.

The weight rho(Y) = (1/2) sqrt(3/pi) exp(-3Y^2/4) is the invariant Gaussian
(variance 2/3) of the drift operator

    L eps = -eps + (3/2) Y d_Y eps - d_YY eps,

whose spectrum is {-1 + 3i/2, i = 0, 1, 2, ...} with polynomial
eigenfunctions h_i(Y) (h_0 = 1, h_1 = sqrt(3) Y, h_2 = 3Y^2 - 2, and the
recurrence h_{i+1} = sqrt(3) Y h_i - 2i h_{i-1}). Their rho-norms are
||h_i||^2 = 2^i i!. Removing the span of h_0, h_1, h_2 leaves the Dirichlet
form coercive: ||d_Y eps||^2 >= (9/2) ||eps||^2.

Quadrature is composite Gauss-Legendre on [-Y_cut, Y_cut]; with the default
Y_cut = 12 the discarded Gaussian tail is far below double precision for
polynomially bounded integrands. Half-line inner products restrict the
panel range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ParameterError, QuadratureError
from .grid import Field, derivative

RHO_NORMALIZATION = 0.5 * math.sqrt(3.0 / math.pi)
_MAX_HERMITE = 64


def rho(Y) -> np.ndarray | float:
    """Gaussian weight (1/2) sqrt(3/pi) exp(-3 Y^2 / 4); integrates to 1."""
    Y = np.asarray(Y, dtype=float)
    out = RHO_NORMALIZATION * np.exp(-0.75 * Y**2)
    return out if out.ndim else float(out)


def hermite(i: int, Y) -> np.ndarray | float:
    """Eigenpolynomial h_i from its explicit sum,

        h_i(Y) = sum_j i! / (j! (i-2j)!) 3^((i-2j)/2) (-1)^j Y^(i-2j).
    """
    if int(i) != i or i < 0 or i > _MAX_HERMITE:
        raise ParameterError(f"hermite index must be in [0, {_MAX_HERMITE}], got {i}")
    i = int(i)
    Y = np.asarray(Y, dtype=float)
    out = np.zeros_like(Y)
    for j in range(i // 2 + 1):
        p = i - 2 * j
        coeff = (math.factorial(i) // (math.factorial(j) * math.factorial(p))
                 ) * (-1) ** j * 3.0 ** (p / 2.0)
        out = out + coeff * Y**p
    return out if out.ndim else float(out)


def hermite_norm_sq(i: int) -> float:
    """Analytic rho-norm ||h_i||^2 = 2^i i! (Gaussian moments, variance 2/3)."""
    return float(2**i * math.factorial(i))


def eigenvalue(i: int) -> float:
    """Eigenvalue of L on h_i."""
    return -1.0 + 1.5 * i


def _gl_panels(lo: float, hi: float, n_panels: int, order: int = 12):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    x = (mid + half * nodes[None, :]).ravel()
    w = (half * weights[None, :]).ravel()
    return x, w


def _field_grid(f, g):
    """Common grid of two Field/callable operands, or None if both callable."""
    fg = f.grid if isinstance(f, Field) else None
    gg = g.grid if isinstance(g, Field) else None
    if fg is not None and gg is not None:
        if fg.n != gg.n or not np.array_equal(fg.nodes, gg.nodes):
            raise ParameterError("inner product needs fields on the same grid")
        return fg
    return fg if fg is not None else gg


def _values_on(f, Y):
    return f.values if isinstance(f, Field) else np.asarray(f(Y), dtype=float)


@dataclass
class HermiteFrame:
    """Quadrature context for L^2_rho inner products on [Y0, infinity).

    Y0 = None means the whole line. Integrals are truncated at Y_cut where
    rho is below 1e-46; construction verifies that rho still integrates to
    1 within 1e-12 on the truncated panels.
    """

    Y0: float | None = None
    Y_cut: float = 12.0
    n_quad: int = 96
    max_index: int = 12
    _nodes: np.ndarray = dataclass_field(init=False, repr=False)
    _weights: np.ndarray = dataclass_field(init=False, repr=False)

    def __post_init__(self):
        if self.Y_cut <= 0 or self.n_quad < 8:
            raise ParameterError("need Y_cut > 0 and n_quad >= 8 panels")
        if self.max_index > _MAX_HERMITE:
            raise ParameterError("max_index too large")
        lo = -self.Y_cut if self.Y0 is None else max(self.Y0, -self.Y_cut)
        self._nodes, self._weights = _gl_panels(lo, self.Y_cut, self.n_quad)
        if self.Y0 is None:
            total = float(np.sum(self._weights * rho(self._nodes)))
            if abs(total - 1.0) > 1e-12:
                raise QuadratureError(
                    f"rho quadrature integrates to {total!r}, not 1")

    @property
    def quad_nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def quad_weights(self) -> np.ndarray:
        return self._weights

    def inner_product_rho(self, f, g, Y0: float | None = None) -> float:
        """Integral of f * g * rho over [Y0, Y_cut] (default: frame range).

        Two fields must share a grid (trapezoid on it, which keeps the
        product linear in the samples); pure callables use the frame's
        Gauss-Legendre panels.
        """
        grid = _field_grid(f, g)
        lo = float(self._nodes[0]) if Y0 is None else max(Y0, -self.Y_cut)
        if grid is not None:
            Y = grid.nodes
            m = (Y >= lo) & (Y <= self.Y_cut)
            if np.count_nonzero(m) < 2:
                raise ParameterError("inner product range is empty")
            Ym = Y[m]
            vals = _values_on(f, Y)[m] * _values_on(g, Y)[m] * rho(Ym)
            return float(np.trapezoid(vals, Ym))
        hi = self.Y_cut
        if hi <= lo:
            raise ParameterError("inner product range is empty")
        x, w = _gl_panels(lo, hi, self.n_quad)
        return float(np.sum(w * f(x) * g(x) * rho(x)))

    def norm_sq(self, f, Y0: float | None = None) -> float:
        return self.inner_product_rho(f, f, Y0)

    def hermite_norm_sq_quadrature(self, i: int) -> float:
        if i > self.max_index:
            raise ParameterError(f"index {i} above frame max_index {self.max_index}")
        return self.inner_product_rho(lambda Y: hermite(i, Y), lambda Y: hermite(i, Y))

    def project_off_low_modes(self, eps: Field) -> Field:
        """Subtract the h_0, h_1, h_2 components in L^2_rho."""
        out = eps.values.copy()
        Y = eps.grid.nodes
        for i in range(3):
            hi = lambda x, i=i: hermite(i, x)
            c = self.inner_product_rho(eps, hi) / self.inner_product_rho(hi, hi)
            out -= c * hermite(i, Y)
        return eps.with_values(out)

    def low_mode_coefficients(self, eps: Field) -> np.ndarray:
        return np.array([
            self.inner_product_rho(eps, lambda x, i=i: hermite(i, x))
            for i in range(3)
        ])


def apply_L(eps: Field) -> Field:
    """Finite-difference application of L = -1 + (3/2) Y d_Y - d_YY."""
    d1 = derivative(eps, 1).values
    d2 = derivative(eps, 2).values
    return eps.with_values(-eps.values + 1.5 * eps.grid.nodes * d1 - d2)


def eigen_residual(i: int, eps_grid_field: Field | None = None,
                   half_width: float = 6.0, spacing: float = 1e-3) -> float:
    """Relative L^2_rho residual of L h_i against its eigenvalue.

    Uses trapezoid quadrature on the field's own (fine, uniform) grid; the
    Gaussian weight makes the truncation beyond |Y| = 6 irrelevant.
    """
    if eps_grid_field is None:
        from .grid import Grid
        n = int(round(2 * half_width / spacing)) + 1
        Y = np.linspace(-half_width, half_width, n)
        eps_grid_field = Field(Grid(Y), hermite(i, Y))
    Y = eps_grid_field.grid.nodes
    res = apply_L(eps_grid_field).values - eigenvalue(i) * eps_grid_field.values
    w = rho(Y)
    num = np.trapezoid(res**2 * w, Y)
    den = np.trapezoid(eps_grid_field.values**2 * w, Y)
    return float(np.sqrt(num / den))


def poincare_check(eps: Field) -> tuple[float, float]:
    """Both sides of the Gaussian-weight Poincare bound

        int Y^2 eps^2 e^(-Y^2/4) <= 4 int eps^2 e^(-Y^2/4)
                                     + 16 int |d_Y eps|^2 e^(-Y^2/4),

    integrated by trapezoid on the field's grid (even-reflect the field
    first if it lives on a half-line)."""
    Y = eps.grid.nodes
    w = np.exp(-0.25 * Y**2)
    d = derivative(eps, 1).values
    lhs = float(np.trapezoid(Y**2 * eps.values**2 * w, Y))
    rhs = float(4.0 * np.trapezoid(eps.values**2 * w, Y)
                + 16.0 * np.trapezoid(d**2 * w, Y))
    return lhs, rhs


def spectral_gap_check(eps: Field, frame: HermiteFrame | None = None
                       ) -> tuple[float, float]:
    """(||d_Y eps_bar||^2_rho, (9/2) ||eps_bar||^2_rho) after projecting the
    three lowest modes out of eps; the first dominates the second."""
    if frame is None:
        frame = HermiteFrame()
    bar = frame.project_off_low_modes(eps)
    dbar = derivative(bar, 1)
    lhs = frame.norm_sq(dbar)
    rhs = 4.5 * frame.norm_sq(bar)
    return float(lhs), float(rhs)
