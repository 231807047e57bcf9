"""Self-similar blow-up profiles of the inviscid rescaled equation.

The stationary equation in the rescaled variable Z,

    F - F^2 + ( -(1 - 1/(2k)) Z + int_0^Z F ) dF/dZ = 0,

admits, for each integer k >= 1, an even bump G_k supported on [-a_k, a_k]
with a_k = pi / sin(pi/(2k)), equal to 1 at the center. The construction
runs through an auxiliary parameter: with u >= 0,

    Z(u) = int_0^u 2k / (1 + v^(2k)) dv,      G(u) = 1 / (1 + u^(2k)),

which makes the integrand smooth (the substitution u = xi^(1/(2k)) removes
the endpoint singularity of dZ/dxi). For k = 1 this collapses to
Z = 2 arctan(u) and G = cos^2(Z/2). Near the center G = 1 - (2k)^(-2k) Z^(2k)
+ O(Z^(4k)); near the support edge G = (1 - 1/(2k))^(2k/(2k-1)) (a_k - Z)^(2k/(2k-1)).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Union

import numpy as np

from .errors import FitError, GlueSpecError, ParameterError, QuadratureError
from .grid import Field, Grid, MonotoneInterpolant, cumulative_integral, derivative

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def g1_exact(Z) -> np.ndarray | float:
    """The explicit k = 1 profile: cos^2(Z/2) on [-pi, pi], zero outside."""
    Z = np.asarray(Z, dtype=float)
    out = np.where(np.abs(Z) <= np.pi, np.cos(Z / 2.0) ** 2, 0.0)
    return out if out.ndim else float(out)


def dg1_exact(Z) -> np.ndarray | float:
    """Derivative of g1_exact."""
    Z = np.asarray(Z, dtype=float)
    out = np.where(np.abs(Z) <= np.pi, -0.5 * np.sin(Z), 0.0)
    return out if out.ndim else float(out)


def support_half_width(k: int) -> float:
    """Support half-width a_k = pi / sin(pi/(2k))."""
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    return np.pi / np.sin(np.pi / (2.0 * k))


def _edge_tail(k: int, u: float, terms: int = 12) -> float:
    """a_k - Z(u) for large u, by the alternating asymptotic series."""
    j = np.arange(terms)
    powers = 2.0 * k * (j + 1) - 1.0
    series = (-1.0) ** j * 2.0 * k * u ** (-powers) / powers
    return float(np.sum(series))


@dataclass(frozen=True)
class ProfileTable:
    """Tabulated profile G_k, parametrized by u (see module docstring)."""

    k: int
    a_k: float
    u_samples: np.ndarray
    Z_samples: np.ndarray
    G_samples: np.ndarray
    center_coeff: float
    edge_coeff: float
    edge_exponent: float
    _cache: dict = dataclass_field(default_factory=dict, repr=False, compare=False)

    @property
    def Z_last(self) -> float:
        return float(self.Z_samples[-1])

    def _interp_G(self) -> MonotoneInterpolant:
        if "G" not in self._cache:
            self._cache["G"] = MonotoneInterpolant(self.Z_samples, self.G_samples)
        return self._cache["G"]

    def _interp_logu(self) -> MonotoneInterpolant:
        if "logu" not in self._cache:
            m = (self.u_samples > 0.0) & (self.u_samples <= 1.0)
            self._cache["logu"] = MonotoneInterpolant(
                np.log(self.Z_samples[m]), np.log(self.u_samples[m]))
        return self._cache["logu"]

    def evaluate(self, Z) -> np.ndarray:
        """G_k(Z): even in Z, zero outside [-a_k, a_k], edge asymptote past
        the last tabulated point."""
        Z = np.atleast_1d(np.asarray(Z, dtype=float))
        az = np.abs(Z)
        out = np.zeros_like(az)
        inside = az <= self.Z_last
        out[inside] = self._interp_G()(az[inside])
        edge = (az > self.Z_last) & (az < self.a_k)
        out[edge] = self.edge_coeff * (self.a_k - az[edge]) ** self.edge_exponent
        return out

    def derivative(self, Z) -> np.ndarray:
        """dG_k/dZ (odd in Z), from the interpolant and edge asymptote."""
        Z = np.atleast_1d(np.asarray(Z, dtype=float))
        az = np.abs(Z)
        out = np.zeros_like(az)
        inside = az <= self.Z_last
        out[inside] = self._interp_G().derivative(az[inside])
        edge = (az > self.Z_last) & (az < self.a_k)
        out[edge] = (-self.edge_coeff * self.edge_exponent
                     * (self.a_k - az[edge]) ** (self.edge_exponent - 1.0))
        return out * np.where(Z < 0.0, -1.0, 1.0)

    def center_deficit(self, Z) -> np.ndarray:
        """1 - G_k(Z), computed stably through u so it stays accurate when
        far below machine epsilon relative to 1."""
        Z = np.atleast_1d(np.asarray(Z, dtype=float))
        az = np.abs(Z)
        out = np.empty_like(az)
        z_first = self.Z_samples[1]
        z_mid = float(self._z_of_u_one())
        tiny = az < z_first
        out[tiny] = (az[tiny] / (2.0 * self.k)) ** (2 * self.k)
        mid = (az >= z_first) & (az <= z_mid)
        u = np.exp(self._interp_logu()(np.log(az[mid])))
        out[mid] = u ** (2 * self.k) / (1.0 + u ** (2 * self.k))
        rest = az > z_mid
        out[rest] = 1.0 - self.evaluate(az[rest])
        return out

    def _z_of_u_one(self) -> float:
        if "z1" not in self._cache:
            i = int(np.searchsorted(self.u_samples, 1.0))
            self._cache["z1"] = self.Z_samples[min(i, self.u_samples.size - 1)]
        return self._cache["z1"]


def build_profile(k: int, n: int = 4096, tol: float = 1.0e-9) -> ProfileTable:
    """Tabulate G_k by cumulative Gauss-Legendre quadrature of dZ/du.

    The table covers Z from 0 up to within `tol` of a_k: the u range is cut
    where the analytic tail of the Z-integral drops below tol/2, and the
    accumulated quadrature is cross-checked against the closed-form a_k.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    if n < 64:
        raise ParameterError("need n >= 64 table points")
    if tol <= 0.0:
        raise ParameterError("tol must be positive")
    k = int(k)
    two_k = 2 * k
    a_k = support_half_width(k)

    # u = tan(phi) with uniform phi: the sample spacing varies smoothly, is
    # exactly uniform in Z for k = 1, and clusters toward the edge for k >= 2
    u_max = (4.0 * k / ((two_k - 1) * tol)) ** (1.0 / (two_k - 1))
    phi = np.linspace(0.0, np.arctan(u_max), n + 1)
    u = np.tan(phi)

    # panelwise 12-point Gauss-Legendre of dZ/dphi = 2k (1+tan^2) / (1+tan^2k)
    mid = 0.5 * (phi[1:] + phi[:-1])
    half = 0.5 * np.diff(phi)
    p = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    tp = np.tan(p)
    panel = half * np.sum(_GL_WEIGHTS[None, :] * two_k * (1.0 + tp**2)
                          / (1.0 + tp ** two_k), axis=1)
    Z = np.concatenate([[0.0], np.cumsum(panel)])
    G = 1.0 / (1.0 + u ** two_k)

    drift = abs(Z[-1] + _edge_tail(k, u[-1]) - a_k)
    if drift > 1.0e-10 * a_k:
        raise QuadratureError(
            f"profile quadrature drifted by {drift:.3e} from the support width")

    # drop samples whose Z increment underflows (keeps Z strictly increasing)
    keep = np.concatenate([[True], np.diff(Z) > 1e-14 * a_k])
    u, Z, G = u[keep], Z[keep], G[keep]

    return ProfileTable(
        k=k,
        a_k=a_k,
        u_samples=u,
        Z_samples=Z,
        G_samples=G,
        center_coeff=float(two_k) ** (-two_k),
        edge_coeff=(1.0 - 1.0 / two_k) ** (two_k / (two_k - 1.0)),
        edge_exponent=two_k / (two_k - 1.0),
    )


def profile_mass(table: ProfileTable) -> float:
    """Trapezoid integral of G_k over [0, a_k] (analytically (1-1/(2k)) a_k)."""
    return float(np.trapezoid(table.G_samples, table.Z_samples))


def inviscid_equation_residual(field: Field, k: int) -> Field:
    """Residual of the stationary rescaled equation for a sampled F(Z).

    The grid coordinate is Z itself and the nonlocal term integrates from
    the left end of the grid, so fields must start at the Z origin.
    """
    c = 1.0 - 1.0 / (2.0 * k)
    F = field.values
    dF = derivative(field, 1).values
    intF = cumulative_integral(field).values
    res = F - F**2 + (-c * field.grid.nodes + intF) * dF
    return field.with_values(res)


def profile_residual(table: ProfileTable, interior_margin: float = 0.05) -> float:
    """Sup of the stationary-equation residual on |Z| <= (1-margin) a_k.

    Differentiation and the nonlocal term are reconstructed from the table
    samples alone (the residual is even in Z, so only Z >= 0 is sampled).
    """
    z_cut = (1.0 - interior_margin) * table.a_k
    m = table.Z_samples <= z_cut
    if np.count_nonzero(m) < 8:
        raise ParameterError("table too coarse for the residual window")
    f = Field(Grid(table.Z_samples[m]), table.G_samples[m])
    return float(np.max(np.abs(inviscid_equation_residual(f, table.k).values)))


def fit_center_asymptotics(table: ProfileTable, z_lo: float = 1.0e-3,
                           z_hi: float = 1.0e-2) -> tuple[float, float]:
    """Fit 1 - G ~ coeff * Z^slope on table samples with Z in [z_lo, z_hi].

    Returns (slope, coeff); slope should be 2k and coeff (2k)^(-2k).
    """
    m = (table.Z_samples >= z_lo) & (table.Z_samples <= z_hi)
    if np.count_nonzero(m) < 5:
        raise FitError("too few table samples in the center-fit window")
    u = table.u_samples[m]
    deficit = u ** (2 * table.k) / (1.0 + u ** (2 * table.k))
    slope, intercept = np.polyfit(np.log(table.Z_samples[m]), np.log(deficit), 1)
    return float(slope), float(np.exp(intercept))


def fit_edge_asymptotics(table: ProfileTable, delta_lo: float = 1.0e-5,
                         delta_hi: float = 1.0e-3) -> tuple[float, float]:
    """Fit G ~ coeff * (a_k - Z)^slope near the support edge.

    Returns (slope, coeff); slope should be 2k/(2k-1).
    """
    delta = table.a_k - table.Z_samples
    m = (delta >= delta_lo) & (delta <= delta_hi)
    if np.count_nonzero(m) < 5:
        raise FitError("too few table samples in the edge-fit window")
    slope, intercept = np.polyfit(np.log(delta[m]), np.log(table.G_samples[m]), 1)
    return float(slope), float(np.exp(intercept))


@dataclass(frozen=True)
class Plateau:
    """Constant segment at value 0 or 1."""
    value: int
    length: float


@dataclass(frozen=True)
class Bump:
    """One profile arch of scale mu: full (0 to 0), or a half arch when it
    joins a plateau at value 1."""
    k: int
    mu: float


Segment = Union[Plateau, Bump]


@dataclass(frozen=True)
class GlueSpec:
    segments: tuple

    def __post_init__(self):
        if not self.segments:
            raise GlueSpecError("glue spec needs at least one segment")
        for seg in self.segments:
            if isinstance(seg, Plateau):
                if seg.value not in (0, 1):
                    raise GlueSpecError("plateau value must be 0 or 1")
                if seg.length <= 0.0:
                    raise GlueSpecError("plateau length must be positive")
            elif isinstance(seg, Bump):
                if seg.mu <= 0.0:
                    raise GlueSpecError("bump scale must be positive")
            else:
                raise GlueSpecError(f"unknown segment {seg!r}")


def _profile_lookup(k: int, tables: dict | None):
    if k == 1:
        return g1_exact
    if tables is None or k not in tables:
        raise ParameterError(f"glue with k={k} needs a prebuilt profile table")
    return tables[k].evaluate


def glue(spec: GlueSpec, grid: Grid, tables: dict | None = None) -> Field:
    """Sample a glued solution (plateaus at 0/1 and profile arches) on a grid.

    Junction values must match: a bump entered at value 1 is the falling
    half arch, a bump entered at 0 followed by a plateau at 1 is the rising
    half, otherwise bumps are full arches. Beyond the last segment the field
    continues at the final junction value.
    """
    Z = grid.nodes
    out = np.zeros(grid.n)
    pos = float(grid.nodes[0])
    segments = spec.segments
    first = segments[0]
    value = first.value if isinstance(first, Plateau) else 0

    for i, seg in enumerate(segments):
        if isinstance(seg, Plateau):
            if seg.value != value:
                raise GlueSpecError(
                    f"segment {i}: plateau at {seg.value} after junction value {value}")
            m = (Z >= pos) & (Z <= pos + seg.length)
            out[m] = float(seg.value)
            pos += seg.length
            continue
        a = support_half_width(seg.k)
        gk = _profile_lookup(seg.k, tables)
        nxt = segments[i + 1] if i + 1 < len(segments) else None
        rising_exit = isinstance(nxt, Plateau) and nxt.value == 1
        if value == 1:
            if rising_exit:
                raise GlueSpecError(f"segment {i}: bump cannot join 1 to 1")
            width, center, value = seg.mu * a, pos, 0           # falling half
        elif rising_exit:
            width, center, value = seg.mu * a, pos + seg.mu * a, 1  # rising half
        else:
            width, center, value = 2.0 * seg.mu * a, pos + seg.mu * a, 0  # full arch
        m = (Z >= pos) & (Z <= pos + width)
        out[m] = gk((Z[m] - center) / seg.mu)
        pos += width

    out[Z > pos] = float(value)
    return Field(grid, out)


def self_similar_field(table: ProfileTable, mu: float, T: float, t: float,
                       grid: Grid, y_left: float = 0.0) -> Field:
    """The exact backward self-similar solution of the inviscid equation,

        psi(t, y) = (T-t)^(-1) G_k( (y - y*(t)) (T-t)^(1-1/(2k)) / mu ),

    laid out so its left support edge sits at y_left for all t."""
    if t >= T:
        raise ParameterError("need t < T")
    sigma = (T - t) ** (1.0 - 1.0 / (2.0 * table.k))
    y_star = mu * table.a_k / sigma + y_left
    Z = (grid.nodes - y_star) * sigma / mu
    return Field(grid, table.evaluate(Z) / (T - t))


def self_similar_residual(table: ProfileTable, mu: float, T: float, t: float,
                          grid: Grid, y_left: float = 0.0, dt: float = 1.0e-6,
                          interior_margin: float = 0.05) -> float:
    """Finite-difference residual of psi_t - psi^2 + (int psi) psi_y on the
    interior of the support of the exact self-similar solution."""
    if t >= T:
        raise ParameterError("need t < T")
    psi = self_similar_field(table, mu, T, t, grid, y_left)
    psi_p = self_similar_field(table, mu, T, t + dt, grid, y_left)
    psi_m = self_similar_field(table, mu, T, t - dt, grid, y_left)
    psi_t = (psi_p.values - psi_m.values) / (2.0 * dt)
    psi_y = derivative(psi, 1).values
    nonlocal_term = cumulative_integral(psi).values
    res = psi_t - psi.values**2 + nonlocal_term * psi_y

    sigma = (T - t) ** (1.0 - 1.0 / (2.0 * table.k))
    half_width = mu * table.a_k / sigma
    lo = y_left + 2.0 * interior_margin * half_width
    hi = y_left + 2.0 * half_width * (1.0 - interior_margin)
    m = (grid.nodes >= lo) & (grid.nodes <= hi)
    if not np.any(m):
        raise ParameterError("grid does not cover the profile support")
    return float(np.max(np.abs(res[m])))
