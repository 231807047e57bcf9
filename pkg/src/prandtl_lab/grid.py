"""Nonuniform 1D meshes and the discrete calculus on them.

Everything downstream (profiles, solver, modulation) computes on a `Grid`
(strictly increasing nodes starting at 0) and `Field` (samples on a grid).
Derivatives use three-point stencils that are exact for quadratics on any
node distribution; the cumulative integral is the trapezoid rule; the
interpolant is a monotonicity-limited cubic Hermite whose slopes come from
local four-point stencils, so it is fourth-order accurate on smooth
monotone data while never overshooting between samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainTruncationError, ExtrapolationError, ParameterError

MIN_NODES = 8


@dataclass(frozen=True)
class Grid:
    """Strictly increasing nodes. Physical y-grids start at 0 (build_grid
    enforces this); shifted/rescaled frames (Y, Z variables) may not."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < MIN_NODES:
            raise ParameterError(f"grid needs at least {MIN_NODES} nodes, got {nodes.size}")
        if not np.all(np.isfinite(nodes)):
            raise ParameterError("grid nodes must be finite")
        if not np.all(np.diff(nodes) > 0.0):
            raise ParameterError("grid nodes must be strictly increasing")
        nodes = nodes.copy()
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def y_min(self) -> float:
        return float(self.nodes[0])

    @property
    def y_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)


@dataclass(frozen=True)
class Field:
    """Scalar samples on a grid. Non-finite values are a hard error."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ParameterError("field values must match the grid size")
        if not np.all(np.isfinite(values)):
            raise ParameterError("field contains NaN/Inf")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)


def fd_weights(x, x0: float, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at x0 (Fornberg).

    Returns w such that sum(w * f(x)) approximates f^(m)(x0), exact for
    polynomials of degree len(x) - 1.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if m >= n:
        raise ParameterError("need more nodes than the derivative order")
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            for k in range(mn, 0, -1):
                c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
            c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def build_grid(y_max: float, n: int, stretch: float = 1.0, focus: float = 0.0,
               max_ratio: float = 1.0e6) -> Grid:
    """Grid on [0, y_max] clustered around `focus`.

    Adjacent spacings grow geometrically by `stretch` away from the focus
    (capped at `max_ratio` overall so huge grids stay finite); stretch = 1
    gives np.linspace exactly.
    """
    if y_max <= 0.0:
        raise ParameterError("y_max must be positive")
    if n < MIN_NODES:
        raise ParameterError(f"need n >= {MIN_NODES}, got {n}")
    if not 0.0 <= focus <= y_max:
        raise ParameterError("focus must lie inside [0, y_max]")
    if stretch < 1.0:
        raise ParameterError("stretch must be >= 1")
    if stretch == 1.0:
        return Grid(np.linspace(0.0, y_max, n))

    # spacing template by index distance from the focus interval
    d_cap = int(np.ceil(np.log(max_ratio) / np.log(stretch)))
    dist = np.minimum(np.arange(n - 1), d_cap)
    template = stretch ** dist.astype(float)
    csum = np.concatenate([[0.0], np.cumsum(template)])

    # node position of candidate focus index j*: left mass / total mass
    j_star = np.arange(n)
    left = csum[j_star]            # sum of template[0:j*] = spacings left of j*
    right = csum[(n - 1) - j_star]
    pos = y_max * left / (left + right)
    j = int(np.argmin(np.abs(pos - focus)))

    # distances measured from the focus node j: interval i spans [i, i+1]
    dist_from_focus = np.where(np.arange(n - 1) >= j,
                               np.arange(n - 1) - j,
                               j - 1 - np.arange(n - 1))
    widths = stretch ** np.minimum(dist_from_focus, d_cap).astype(float)
    nodes = np.concatenate([[0.0], np.cumsum(widths)])
    nodes *= y_max / nodes[-1]
    nodes[0] = 0.0
    nodes[-1] = y_max
    return Grid(nodes)


def derivative(field: Field, order: int) -> Field:
    """First or second derivative, three-point stencils.

    Interior stencils are the nonuniform central ones; boundary nodes use
    one-sided three-point stencils. Exact for quadratics everywhere.
    """
    if order not in (1, 2):
        raise ParameterError("order must be 1 or 2")
    y = field.grid.nodes
    f = field.values
    h = np.diff(y)
    hm, hp = h[:-1], h[1:]
    out = np.empty_like(f)
    if order == 1:
        out[1:-1] = (-hp / (hm * (hm + hp)) * f[:-2]
                     + (hp - hm) / (hm * hp) * f[1:-1]
                     + hm / (hp * (hm + hp)) * f[2:])
    else:
        out[1:-1] = 2.0 * (f[:-2] / (hm * (hm + hp))
                           - f[1:-1] / (hm * hp)
                           + f[2:] / (hp * (hm + hp)))
    # one-sided boundary stencils, 3 points for order 1 and 4 for order 2,
    # both second-order accurate
    p = order + 2
    out[0] = fd_weights(y[:p], y[0], order) @ f[:p]
    out[-1] = fd_weights(y[-p:], y[-1], order) @ f[-p:]
    return field.with_values(out)


def cumulative_integral(field: Field) -> Field:
    """Trapezoid cumulative integral from the origin; result[0] = 0."""
    y = field.grid.nodes
    f = field.values
    out = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(y))])
    return field.with_values(out)


def _four_point_slopes(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """First-derivative estimates at every node from local cubics.

    Node i uses the four nodes i-2..i+1 or i-1..i+2 (whichever is centered
    better), one-sided near the ends. O(h^3) accurate on smooth data.
    """
    n = x.size
    d = np.empty(n)
    if n < 4:
        for i in range(n):
            d[i] = fd_weights(x, x[i], 1) @ f
        return d
    # window start for each node, clipped so the 4-point window stays inside
    start = np.clip(np.arange(n) - 1, 0, n - 4)
    xi = np.stack([x[start + k] for k in range(4)], axis=1)
    fi = np.stack([f[start + k] for k in range(4)], axis=1)
    x0 = x[:, None]
    # derivative of the Lagrange basis at x0, vectorized over nodes
    w = np.empty_like(xi)
    idx = np.arange(4)
    for j in range(4):
        others = idx[idx != j]
        denom = np.prod(xi[:, j, None] - xi[:, others], axis=1)
        num = np.zeros(n)
        for mth in others:
            rest = others[others != mth]
            num += np.prod(x0 - xi[:, rest], axis=1)
        w[:, j] = num / denom
    d[:] = np.sum(w * fi, axis=1)
    return d


def _limit_slopes(x: np.ndarray, f: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Fritsch-Carlson limiter: clamp slopes so each interval is monotone."""
    s = np.diff(f) / np.diff(x)
    d = d.copy()
    n = x.size
    # interior nodes: zero at local extrema, else clip into [0, 3*min(|s|)]
    sl, sr = s[:-1], s[1:]
    interior = slice(1, n - 1)
    di = d[interior]
    extremum = sl * sr <= 0.0
    di = np.where(extremum, 0.0, di)
    lim = 3.0 * np.minimum(np.abs(sl), np.abs(sr))
    sign = np.sign(sl + sr)
    wrong_sign = (di * np.where(sign == 0, 1.0, sign) < 0.0) & ~extremum
    di = np.where(wrong_sign, 0.0, di)
    di = np.clip(di, -lim, lim)
    d[interior] = di
    # endpoints clip against the single adjacent secant
    for i, si in ((0, s[0]), (n - 1, s[-1])):
        if d[i] * si < 0.0:
            d[i] = 0.0
        elif abs(d[i]) > 3.0 * abs(si):
            d[i] = 3.0 * si
    return d


class MonotoneInterpolant:
    """Shape-preserving cubic Hermite interpolant of (x, f)."""

    def __init__(self, x, f):
        self.x = np.asarray(x, dtype=float)
        self.f = np.asarray(f, dtype=float)
        d = _four_point_slopes(self.x, self.f)
        self.d = _limit_slopes(self.x, self.f, d)

    def __call__(self, xq):
        xq = np.asarray(xq, dtype=float)
        x, f, d = self.x, self.f, self.d
        i = np.clip(np.searchsorted(x, xq) - 1, 0, x.size - 2)
        h = x[i + 1] - x[i]
        t = (xq - x[i]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return h00 * f[i] + h10 * h * d[i] + h01 * f[i + 1] + h11 * h * d[i + 1]

    def derivative(self, xq):
        xq = np.asarray(xq, dtype=float)
        x, f, d = self.x, self.f, self.d
        i = np.clip(np.searchsorted(x, xq) - 1, 0, x.size - 2)
        h = x[i + 1] - x[i]
        t = (xq - x[i]) / h
        dh00 = 6 * t * (t - 1) / h
        dh10 = (1 - t) * (1 - 3 * t)
        dh01 = -6 * t * (t - 1) / h
        dh11 = t * (3 * t - 2)
        return dh00 * f[i] + dh10 * d[i] + dh01 * f[i + 1] + dh11 * d[i + 1]


def interpolate(field: Field, targets: Grid) -> Field:
    """Monotone cubic interpolation of a field onto target nodes.

    Raises ExtrapolationError if the targets extend beyond the source.
    """
    tol = 1e-12 * max(1.0, abs(field.grid.y_max), abs(field.grid.y_min))
    if targets.y_max > field.grid.y_max + tol or targets.y_min < field.grid.y_min - tol:
        raise ExtrapolationError(
            f"targets span [{targets.y_min}, {targets.y_max}], source spans "
            f"[{field.grid.y_min}, {field.grid.y_max}]")
    interp = MonotoneInterpolant(field.grid.nodes, field.values)
    xq = np.clip(targets.nodes, field.grid.y_min, field.grid.y_max)
    return Field(targets, interp(xq))


def remesh(field: Field, new_focus: float, new_y_max: float, n: int | None = None,
           stretch: float = 1.0, boundary_tol: float = 1.0e-6) -> Field:
    """Move a field to a fresh grid, padding with zeros beyond the old domain.

    The old field must have decayed below `boundary_tol` (relative to its
    max) at the right boundary, otherwise the truncated domain was too small
    and a DomainTruncationError is raised.
    """
    old_y_max = field.grid.y_max
    scale = max(np.max(np.abs(field.values)), 1.0e-300)
    if abs(field.values[-1]) > boundary_tol * scale:
        raise DomainTruncationError(
            f"field value {field.values[-1]:.3e} at y_max exceeds "
            f"{boundary_tol:.1e} of the field scale; y_max too small")
    if new_y_max < old_y_max:
        raise ParameterError("remesh does not shrink the domain")
    if n is None:
        n = field.grid.n
    new_grid = build_grid(new_y_max, n, stretch, min(new_focus, new_y_max))
    interp = MonotoneInterpolant(field.grid.nodes, field.values)
    inside = new_grid.nodes <= old_y_max
    values = np.zeros(new_grid.n)
    values[inside] = interp(new_grid.nodes[inside])
    return Field(new_grid, values)
