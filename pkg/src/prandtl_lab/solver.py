"""Time integration of the reduced boundary-layer trace equation

    xi_t - xi_yy - xi^2 + (int_0^y xi) xi_y = 0,   xi(t, 0) = 0,

on a truncated domain [0, y_max] (homogeneous Dirichlet at both ends; the
solutions of interest are compactly supported plus a negligible tail).

Scheme: IMEX. Diffusion is implicit (tridiagonal solve on the nonuniform
grid) so the parabolic step restriction never binds near the peak; the
quadratic reaction and the nonlocal transport are explicit, with first
order upwinding in the direction of the transport velocity int_0^y xi.
The time step is cfl * min(1 / max|xi|, min_i h_i / |velocity_i|): the
reaction limit gives logarithmically many steps per amplitude decade, the
transport limit tracks the peak as it is ejected to the right.

The peak escapes toward +infinity while the amplitude grows like
1/(T - t); the driver grows the domain geometrically (remesh) whenever the
peak passes a fraction of y_max or the tail reaches the right boundary,
then extrapolation fits recover the blow-up time, the amplitude exponent
(-1) and the peak-trajectory exponent (-1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import FitError, FrameError, InstabilityError, ParameterError
from .grid import (Field, Grid, MonotoneInterpolant, build_grid,
                   cumulative_integral, derivative, fd_weights, remesh)


@dataclass(frozen=True)
class SolverConfig:
    lambda0: float = 4.0
    cfl: float = 0.2
    blowup_threshold: float | None = None   # default 1e5 * lambda0^2
    n_nodes: int = 1536
    y_max0: float | None = None             # default 3 pi lambda0
    stretch: float = 1.0
    remesh_factor: float = 2.0
    remesh_n_factor: float = 1.5
    remesh_peak_fraction: float = 0.6
    boundary_tol: float = 1.0e-8
    max_steps: int = 500_000
    snapshot_factor: float = 1.12
    perturb_amplitude: float = 0.0
    perturb_seed: int = 0
    dt_cap: float = 1.0
    dt_fixed: float | None = None
    enable_diffusion: bool = True
    enable_reaction: bool = True
    enable_transport: bool = True

    def __post_init__(self):
        if self.lambda0 < 2.0:
            raise ParameterError("lambda0 must be >= 2")
        if not 0.0 < self.cfl < 1.0:
            raise ParameterError("cfl must be in (0, 1)")
        if self.threshold < 1.0e4:
            raise ParameterError("blowup_threshold must be >= 1e4")
        if self.remesh_factor <= 1.0:
            raise ParameterError("remesh_factor must exceed 1")

    @property
    def threshold(self) -> float:
        if self.blowup_threshold is not None:
            return self.blowup_threshold
        return 1.0e5 * self.lambda0**2

    @property
    def initial_y_max(self) -> float:
        return self.y_max0 if self.y_max0 is not None else 3.0 * math.pi * self.lambda0


@dataclass(frozen=True)
class SolverState:
    t: float
    dt: float
    field: Field
    step_count: int
    peak_value: float
    peak_location: float


@dataclass(frozen=True)
class BlowupFit:
    T_est: float
    amp_exponent: float
    peak_exponent: float
    r2_amp: float
    r2_peak: float


@dataclass
class RunResult:
    t: np.ndarray
    dt: np.ndarray
    peak_value: np.ndarray
    peak_location: np.ndarray
    mass: np.ndarray
    boundary_slope: np.ndarray
    snapshots: list          # [(t, Field)], always includes the final slice
    final_state: SolverState
    blown_up: bool
    remesh_count: int


def _refined_peak(y: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
    """Max value and parabola-refined argmax through the discrete maximum."""
    j = int(np.argmax(vals))
    if j == 0 or j == vals.size - 1:
        return float(vals[j]), float(y[j])
    x0, x2 = float(y[j - 1] - y[j]), float(y[j + 1] - y[j])
    f0, f1, f2 = float(vals[j - 1]), float(vals[j]), float(vals[j + 1])
    if not (f1 > f0 and f1 > f2):
        # plateau or corner: a fitted parabola would extrapolate above the data
        return f1, float(y[j])
    # quadratic through the three points, in coordinates centered at y_j
    denom = x0 * x2 * (x0 - x2)
    qa = (x2 * (f0 - f1) - x0 * (f2 - f1)) / denom
    qb = (x0 * x0 * (f2 - f1) - x2 * x2 * (f0 - f1)) / denom
    if qa >= 0.0:
        return f1, float(y[j])
    vertex = min(max(-qb / (2.0 * qa), x0), x2)
    peak = f1 + qb * vertex + qa * vertex * vertex
    return max(peak, f1), float(y[j]) + vertex


def make_state(t: float, dt: float, field: Field, step_count: int = 0) -> SolverState:
    if field.values[0] != 0.0:
        raise ParameterError("solver fields must vanish at y = 0")
    pv, pl = _refined_peak(field.grid.nodes, field.values)
    return SolverState(t, dt, field, step_count, pv, pl)


def make_perturbation(grid: Grid, lambda0: float, amplitude: float,
                      seed: int = 0) -> Field:
    """Small smooth random bump supported inside the initial profile."""
    rng = np.random.default_rng(seed)
    y = grid.nodes
    span = 2.0 * math.pi * lambda0
    vals = np.zeros(grid.n)
    for _ in range(3):
        c = rng.uniform(0.3, 0.7) * span
        w = rng.uniform(0.1, 0.25) * span
        vals += rng.normal() * np.exp(-((y - c) / w) ** 2)
    window = np.where((y > 0) & (y < span), np.sin(np.pi * y / span) ** 2, 0.0)
    vals *= window
    m = np.max(np.abs(vals))
    if m > 0:
        vals *= amplitude / m
    return Field(grid, vals)


def initial_datum(lambda0: float, grid: Grid, tilde: Field | None = None) -> Field:
    """The wide bump lambda0^2 cos^2((y - lambda0 pi) / (2 lambda0)) on
    [0, 2 pi lambda0], plus an optional small perturbation."""
    if grid.nodes[0] != 0.0:
        raise ParameterError("the physical grid must start at y = 0")
    if grid.y_max < 3.0 * math.pi * lambda0 - 1e-9:
        raise ParameterError("grid must cover [0, 3 pi lambda0]")
    y = grid.nodes
    vals = np.where(y <= 2.0 * math.pi * lambda0,
                    lambda0**2 * np.cos((y - lambda0 * math.pi)
                                        / (2.0 * lambda0)) ** 2,
                    0.0)
    if tilde is not None:
        if tilde.grid is not grid and not np.array_equal(tilde.grid.nodes, y):
            raise ParameterError("perturbation must live on the same grid")
        vals = vals + tilde.values
    vals[0] = 0.0
    vals[-1] = 0.0
    return Field(grid, vals)


class _GridKernels:
    """Per-grid precomputed arrays for the hot step loop."""

    def __init__(self, grid: Grid):
        self.grid = grid
        y = grid.nodes
        n = y.size
        self.h = np.diff(y)
        hm, hp = self.h[:-1], self.h[1:]
        self.h_local = np.minimum(hm, hp)
        self.trapz_w = np.zeros(n)
        self.trapz_w[:-1] += 0.5 * self.h
        self.trapz_w[1:] += 0.5 * self.h
        self.slope_w = fd_weights(y[:3], y[0], 1)
        # I - dt * D2 in banded form = base + dt * scaled rows
        self.diff_a = 2.0 / (hm * (hm + hp))
        self.diff_b = -2.0 / (hm * hp)
        self.diff_c = 2.0 / (hp * (hm + hp))
        self.ab = np.zeros((3, n))
        self.ab[1, 0] = 1.0
        self.ab[1, n - 1] = 1.0

    def banded_matrix(self, dt: float) -> np.ndarray:
        ab = self.ab
        n = ab.shape[1]
        ab[1, 1:n - 1] = 1.0 - dt * self.diff_b
        ab[0, 2:n] = -dt * self.diff_c
        ab[2, 0:n - 2] = -dt * self.diff_a
        return ab


_KERNEL_CACHE: dict[int, _GridKernels] = {}


def _kernels_for(grid: Grid) -> _GridKernels:
    k = _KERNEL_CACHE.get(id(grid))
    if k is None or k.grid is not grid:
        if len(_KERNEL_CACHE) > 32:
            _KERNEL_CACHE.clear()
        k = _GridKernels(grid)
        _KERNEL_CACHE[id(grid)] = k
    return k


def _choose_dt(cfg: SolverConfig, ker: _GridKernels, vals: np.ndarray,
               velocity: np.ndarray) -> float:
    if cfg.dt_fixed is not None:
        return cfg.dt_fixed
    sup = np.max(np.abs(vals))
    dt = cfg.dt_cap if sup == 0.0 else min(cfg.dt_cap, 1.0 / sup)
    if cfg.enable_transport:
        v_int = np.abs(velocity[1:-1])
        m = v_int > 0.0
        if np.any(m):
            dt = min(dt, float(np.min(ker.h_local[m] / v_int[m])))
    return cfg.cfl * dt


def _explicit_rhs(cfg: SolverConfig, ker: _GridKernels, vals: np.ndarray,
                  velocity: np.ndarray, dt: float) -> np.ndarray:
    rhs = vals.copy()
    if cfg.enable_reaction:
        rhs += dt * vals**2
    if cfg.enable_transport:
        slopes = (vals[1:] - vals[:-1]) / ker.h
        backward = np.concatenate([[0.0], slopes])
        forward = np.concatenate([slopes, [0.0]])
        upwind = np.where(velocity >= 0.0, backward, forward)
        rhs -= dt * velocity * upwind
    rhs[0] = 0.0
    rhs[-1] = 0.0
    return rhs


def step(state: SolverState, config: SolverConfig) -> SolverState:
    """One IMEX step; halves dt and retries (up to 10 times) on NaN/Inf."""
    field = state.field
    ker = _kernels_for(field.grid)
    vals = field.values
    if config.enable_transport:
        velocity = np.concatenate(
            [[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * ker.h)])
    else:
        velocity = np.zeros(vals.size)
    dt = _choose_dt(config, ker, vals, velocity)
    for _ in range(10):
        # overflow here is handled by the finiteness check + dt halving
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = _explicit_rhs(config, ker, vals, velocity, dt)
            if config.enable_diffusion:
                new_vals = solve_banded((1, 1), ker.banded_matrix(dt), rhs,
                                        check_finite=False, overwrite_b=True)
            else:
                new_vals = rhs
        new_vals[0] = 0.0
        new_vals[-1] = 0.0
        if np.all(np.isfinite(new_vals)):
            new_field = Field(field.grid, new_vals)
            pv, pl = _refined_peak(field.grid.nodes, new_vals)
            return SolverState(state.t + dt, dt, new_field,
                               state.step_count + 1, pv, pl)
        dt *= 0.5
    raise InstabilityError(f"step produced NaN/Inf at t = {state.t}")


def _needs_remesh(cfg: SolverConfig, state: SolverState) -> bool:
    grid = state.field.grid
    if state.peak_location > cfg.remesh_peak_fraction * grid.y_max:
        return True
    tail = grid.nodes > 0.8 * grid.y_max
    tail_max = float(np.max(np.abs(state.field.values[tail])))
    return tail_max > cfg.boundary_tol * max(state.peak_value, 1.0)


def run_until_blowup(config: SolverConfig, initial: Field | None = None) -> RunResult:
    """March to the blow-up threshold (or exhaust the step budget).

    Returns the full per-step series, snapshots spaced by a fixed amplitude
    ratio, and whether the threshold was reached; exhausting the budget is
    reported, not raised. `initial` overrides the standard datum (its
    boundary values are zeroed).
    """
    if initial is not None:
        vals = initial.values.copy()
        vals[0] = 0.0
        vals[-1] = 0.0
        state = make_state(0.0, 0.0, Field(initial.grid, vals), 0)
    else:
        grid = build_grid(config.initial_y_max, config.n_nodes, config.stretch,
                          focus=math.pi * config.lambda0 if config.stretch > 1
                          else 0.0)
        tilde = None
        if config.perturb_amplitude > 0.0:
            tilde = make_perturbation(grid, config.lambda0,
                                      config.perturb_amplitude,
                                      config.perturb_seed)
        state = make_state(0.0, 0.0, initial_datum(config.lambda0, grid, tilde), 0)

    cols = {k: [] for k in ("t", "dt", "peak_value", "peak_location",
                            "mass", "boundary_slope")}
    snapshots = [(state.t, state.field)]
    next_snap = state.peak_value * config.snapshot_factor
    remesh_count = 0
    blown_up = False

    def log_row(s: SolverState):
        ker = _kernels_for(s.field.grid)
        cols["t"].append(s.t)
        cols["dt"].append(s.dt)
        cols["peak_value"].append(s.peak_value)
        cols["peak_location"].append(s.peak_location)
        cols["mass"].append(float(ker.trapz_w @ s.field.values))
        cols["boundary_slope"].append(float(ker.slope_w @ s.field.values[:3]))

    log_row(state)
    while state.step_count < config.max_steps:
        state = step(state, config)
        log_row(state)
        if state.peak_value >= next_snap:
            snapshots.append((state.t, state.field))
            next_snap = state.peak_value * config.snapshot_factor
        if state.peak_value >= config.threshold:
            blown_up = True
            break
        if _needs_remesh(config, state):
            # the node count grows with the domain so the spacing (and with
            # it the upwind truncation error relative to the reaction)
            # keeps shrinking compared to the profile scale
            new_y_max = config.remesh_factor * state.field.grid.y_max
            new_n = int(round(state.field.grid.n * config.remesh_n_factor))
            new_field = remesh(state.field, state.peak_location, new_y_max,
                               n=new_n, stretch=config.stretch,
                               boundary_tol=1e-3)
            vals = new_field.values.copy()
            vals[0] = 0.0
            vals[-1] = 0.0
            state = make_state(state.t, state.dt, Field(new_field.grid, vals),
                               state.step_count)
            remesh_count += 1
    if snapshots[-1][0] != state.t:
        snapshots.append((state.t, state.field))
    return RunResult(
        t=np.asarray(cols["t"]), dt=np.asarray(cols["dt"]),
        peak_value=np.asarray(cols["peak_value"]),
        peak_location=np.asarray(cols["peak_location"]),
        mass=np.asarray(cols["mass"]),
        boundary_slope=np.asarray(cols["boundary_slope"]),
        snapshots=snapshots, final_state=state, blown_up=blown_up,
        remesh_count=remesh_count)


def _linfit_r2(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_blowup(t: np.ndarray, peak_value: np.ndarray,
               peak_location: np.ndarray | None = None) -> BlowupFit:
    """Extrapolate the blow-up time and fit the growth exponents.

    T comes from the linear late-time law of 1/peak vs t; the amplitude and
    peak-trajectory exponents are log-log slopes against T - t, all fitted
    over the last decade of amplitude growth.
    """
    t = np.asarray(t, dtype=float)
    peak_value = np.asarray(peak_value, dtype=float)
    growth = np.max(peak_value) / max(np.min(peak_value), 1e-300)
    if growth < 100.0:
        raise FitError(f"need >= 2 decades of peak growth, got {growth:.3g}x")
    last = peak_value >= np.max(peak_value) / 10.0
    tt, pp = t[last], peak_value[last]
    slope, intercept, _ = _linfit_r2(tt, 1.0 / pp)
    if slope >= 0.0:
        raise FitError("peak is not growing toward blow-up")
    T_est = -intercept / slope
    tau = T_est - tt
    good = tau > 0.0
    amp_slope, _, r2_amp = _linfit_r2(np.log(tau[good]), np.log(pp[good]))
    peak_slope, r2_peak = math.nan, math.nan
    if peak_location is not None:
        loc = np.asarray(peak_location, dtype=float)[last]
        m = good & (loc > 0.0)
        peak_slope, _, r2_peak = _linfit_r2(np.log(tau[m]), np.log(loc[m]))
    return BlowupFit(float(T_est), amp_slope, peak_slope, r2_amp, r2_peak)


def rescaled_snapshot(state: SolverState, fit: BlowupFit | None = None,
                      n_out: int = 801) -> Field:
    """Interpolate xi onto the profile frame Z in [-pi, pi].

    lambda is sqrt(peak) (the profile's center value is 1) and mu comes
    from the full width at half maximum, matched against the level set of
    cos^2(Z/2) at 1/2 (|Z| = pi/2)."""
    y = state.field.grid.nodes
    vals = state.field.values
    peak, y_star = state.peak_value, state.peak_location
    lam = math.sqrt(peak)
    half = 0.5 * peak
    j = int(np.argmin(np.abs(y - y_star)))
    below_l = np.nonzero(vals[:j] < half)[0]
    above_r = np.nonzero(vals[j:] < half)[0]
    if below_l.size == 0 or above_r.size == 0:
        raise FrameError("half-maximum level not bracketed inside the domain")
    il = below_l[-1]
    ir = j + above_r[0]
    y_left = np.interp(half, [vals[il], vals[il + 1]], [y[il], y[il + 1]])
    y_right = np.interp(half, [vals[ir], vals[ir - 1]], [y[ir], y[ir - 1]])
    mu = (y_right - y_left) / (lam * math.pi)
    Z = np.linspace(-math.pi, math.pi, n_out)
    yq = y_star + lam * mu * Z
    # the left frame end sits within O(a) of y = 0 where xi vanishes anyway;
    # tolerate a small clamped undershoot there, never on the right
    width = lam * mu * math.pi
    if yq[0] < y[0] - 0.05 * width or yq[-1] > y[-1] + 1e-9:
        raise FrameError("profile frame leaves the computational domain")
    F = MonotoneInterpolant(y, vals)(np.clip(yq, y[0], y[-1])) / peak
    return Field(Grid(Z), F)


@dataclass(frozen=True)
class ProbeReport:
    window: tuple
    sup_xi: float
    sup_dxi: float
    late_sup_xi: float
    late_sup_dxi: float
    quad_exponent: float
    quad_coeff: float
    mu_proxy: float


def compact_regularity_probe(result: RunResult, y_window: float = 0.5,
                             fit_lo: float = 0.10, fit_hi: float = 0.30
                             ) -> ProbeReport:
    """Check regularity on a fixed compact set and fit the final quadratic.

    On y <= y_window the solution and its slope must stay bounded through
    blow-up; on the intermediate window [fit_lo, fit_hi] * y*_final the last
    snapshot follows c y^2, giving the mu_infinity proxy 1 / (2 sqrt(c)).
    """
    sup_xi = sup_dxi = 0.0
    late_sup_xi = late_sup_dxi = 0.0
    peak_final = result.final_state.peak_value
    for tt, f in result.snapshots:
        m = f.grid.nodes <= y_window
        s = float(np.max(np.abs(f.values[m])))
        d = float(np.max(np.abs(derivative(f, 1).values[m])))
        sup_xi, sup_dxi = max(sup_xi, s), max(sup_dxi, d)
        # final decade of amplitude growth
        pv = float(np.max(f.values))
        if pv >= peak_final / 10.0:
            late_sup_xi, late_sup_dxi = max(late_sup_xi, s), max(late_sup_dxi, d)
    f = result.final_state.field
    y_star = result.final_state.peak_location
    y = f.grid.nodes
    m = (y >= fit_lo * y_star) & (y <= fit_hi * y_star)
    slope, _, _ = _linfit_r2(np.log(y[m]), np.log(np.maximum(f.values[m], 1e-300)))
    coeff = float(np.sum(f.values[m] * y[m] ** 2) / np.sum(y[m] ** 4))
    return ProbeReport(
        window=(0.0, y_window), sup_xi=sup_xi, sup_dxi=sup_dxi,
        late_sup_xi=late_sup_xi, late_sup_dxi=late_sup_dxi,
        quad_exponent=float(slope), quad_coeff=coeff,
        mu_proxy=1.0 / (2.0 * math.sqrt(max(coeff, 1e-300))))
