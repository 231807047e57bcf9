"""Extraction of the renormalization parameters and trapped-regime diagnostics.

A solution close to blow-up is written

    xi(t, y) = lambda^2 [ G_1(Z) + u(s, Z) ],   Z = (y - y*) / (lambda mu),

with the parabolic frame Y = lambda (y - y*), f = xi / lambda^2 and the
renormalized time ds/dt = lambda^2. The triple (lambda, mu, y*) is pinned,
per time slice, by requiring the remainder in the parabolic frame to be
orthogonal to the three lowest Gaussian-weight modes h_0, h_1, h_2: a
3-unknown Newton solve on

    R_i = < f(. + b) - c^2 G_1( . / (c^2 mu_hat S)) , h_i >_rho = 0,

where S is the frame's Y-to-Z scale and (c, mu_hat, b) are corrections to
the frame guess. The correction a is defined through y* = lambda mu (pi + a).

To leading order the parameters obey

    lambda_s / lambda = 1/2 - 1/(4 lambda^4 mu^2),
    mu_s / mu        = 1/(2 lambda^4 mu^2),

so the residuals r_lambda, r_mu of these laws measured along a run are the
quantitative check of the blow-up ODEs.

The exterior diagnostics use the anisotropic weight w(s, Z) (roughly
|Z|^-7 s^-q(Z) inside the profile support, 1/s outside) and the vector
field A d_Z with A = sin Z near the center and +-1 beyond |Z| = pi/2. The
shape function is q(Z) = sin(|Z|/2) capped at 1: it vanishes at 0, rises
strictly on (0, pi) and is flat past pi, which keeps w continuous at pi and
nonincreasing in s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (DecompositionError, FrameError, ParameterError,
                     SingularPointError)
from .grid import Field, Grid, cumulative_integral, derivative, fd_weights
from .profiles import g1_exact
from .spectral import HermiteFrame, hermite, rho

_QUAD_HALF_WIDTH = 9.0
_FRAME_HALF_WIDTH = 12.0
_MIN_BOUNDARY_DISTANCE = 15.0


@dataclass(frozen=True)
class ModulationState:
    s: float
    lambda_: float
    mu: float
    a: float
    y_star: float
    newton_residual: float

    def __post_init__(self):
        if self.lambda_ <= 0 or self.mu <= 0:
            raise ParameterError("lambda and mu must be positive")

    @classmethod
    def from_parameters(cls, s, lambda_, mu, y_star, newton_residual=math.nan):
        a = y_star / (lambda_ * mu) - math.pi
        return cls(s, lambda_, mu, a, y_star, newton_residual)


@dataclass(frozen=True)
class FrameFields:
    """Renormalized views of one time slice."""
    f: Field                    # parabolic frame, on Y
    lambda_: float
    y_star: float
    s: float
    eps: Field | None = None    # remainder on Y after decomposition
    u: Field | None = None      # remainder on Z


def to_parabolic_frame(field: Field, lambda_: float, y_star: float,
                       s: float = math.nan, half_width: float = _FRAME_HALF_WIDTH,
                       n: int = 1201) -> FrameFields:
    """Interpolate xi onto the uniform Y window of the parabolic frame,
    f(Y) = xi(y* + Y/lambda) / lambda^2."""
    if lambda_ <= 0.0:
        raise ParameterError("lambda must be positive")
    y = field.grid.nodes
    lo_Y = max(-half_width, -lambda_ * (y_star - y[0]))
    hi_Y = min(half_width, lambda_ * (y[-1] - y_star))
    if hi_Y - lo_Y < half_width or hi_Y < 0.75 * half_width:
        raise FrameError("parabolic frame window leaves the domain")
    Y = np.linspace(lo_Y, hi_Y, n)
    spline = CubicSpline(y, field.values)
    f = spline(y_star + Y / lambda_) / lambda_**2
    return FrameFields(Field(Grid(Y), f), lambda_, y_star, s)


def _g1_scaled(Y: np.ndarray, c: float, mu_hat: float, scale: float) -> np.ndarray:
    return c**2 * g1_exact(Y / (c**2 * mu_hat * scale))


def decompose(frame: FrameFields, guess: ModulationState,
              tol: float = 1.0e-11, max_iter: int = 50
              ) -> tuple[ModulationState, Field]:
    """Solve the three orthogonality conditions for (lambda, mu, y*).

    The unknowns are multiplicative corrections (c, mu_hat) and a frame
    shift b relative to the guess; Newton with a forward-difference
    Jacobian and step damping. Returns the absolute parameters and the
    remainder field (orthogonal to h_0, h_1, h_2 within `tol`).
    """
    f = frame.f
    lam_f, ystar_f = frame.lambda_, frame.y_star
    # once lambda y* >= 15 the half-line boundary sits so deep in the
    # Gaussian tail that the restriction is indistinguishable from the
    # whole line; below that the quadrature window honestly stops at it
    scale = lam_f**2  # Y = scale * mu * Z at c = 1
    spline = CubicSpline(f.grid.nodes, f.values)
    lo = max(float(f.grid.y_min), -lam_f * ystar_f, -_QUAD_HALF_WIDTH)
    quad = HermiteFrame(Y0=lo, Y_cut=_QUAD_HALF_WIDTH)
    Yq = quad.quad_nodes
    wq = quad.quad_weights
    h_modes = np.stack([hermite(i, Yq) for i in range(3)])
    rho_q = rho(Yq)
    shift_margin = float(f.grid.y_max) - _QUAD_HALF_WIDTH

    def residuals(x):
        c, mu_hat, b = x
        if c <= 0 or mu_hat <= 0 or abs(b) > shift_margin:
            return None
        eps = spline(Yq + b) - _g1_scaled(Yq, c, mu_hat, scale)
        return (h_modes * eps * rho_q * wq).sum(axis=1)

    x = np.array([1.0, guess.mu, 0.0])
    r = residuals(x)
    if r is None:
        raise DecompositionError("invalid initial guess")
    steps = np.array([1e-7, 1e-3 * guess.mu, 1e-7])
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            break
        jac = np.empty((3, 3))
        for jcol in range(3):
            xp = x.copy()
            xp[jcol] += steps[jcol]
            rp = residuals(xp)
            if rp is None:
                raise DecompositionError("Newton stepped out of the valid box")
            jac[:, jcol] = (rp - r) / steps[jcol]
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise DecompositionError(f"singular Jacobian: {exc}") from exc
        damp = 1.0
        for _ in range(12):
            xn = x + damp * delta
            rn = residuals(xn)
            if rn is not None and np.max(np.abs(rn)) < np.max(np.abs(r)):
                x, r = xn, rn
                break
            damp *= 0.5
        else:
            break
    if np.max(np.abs(r)) > tol:
        raise DecompositionError(
            f"Newton stalled at residual {np.max(np.abs(r)):.3e} (tol {tol:.1e}); "
            "the slice may have left the trapped neighborhood")

    c, mu_hat, b = x
    lam = c * lam_f
    y_star = ystar_f + b / lam_f
    mu = c * mu_hat
    state = ModulationState.from_parameters(frame.s, lam, mu, y_star,
                                            float(np.max(np.abs(r))))
    eps_vals = spline(Yq + b) - _g1_scaled(Yq, c, mu_hat, scale)
    eps = Field(Grid(Yq), eps_vals)
    return state, eps


def _fwhm_mu(field: Field, peak: float, y_star: float, lam: float) -> float:
    """Full width at half maximum matched to cos^2(Z/2) = 1/2 at |Z| = pi/2."""
    y, vals = field.grid.nodes, field.values
    j = int(np.argmin(np.abs(y - y_star)))
    half = 0.5 * peak
    left = np.nonzero(vals[:j] < half)[0]
    right = np.nonzero(vals[j:] < half)[0]
    if left.size == 0 or right.size == 0:
        raise FrameError("half-maximum level not bracketed")
    il, ir = left[-1], j + right[0]
    y_l = np.interp(half, [vals[il], vals[il + 1]], [y[il], y[il + 1]])
    y_r = np.interp(half, [vals[ir], vals[ir - 1]], [y[ir], y[ir - 1]])
    return float((y_r - y_l) / (lam * math.pi))


def track(snapshots, time_series=None, mu_guess: float | None = None
          ) -> list[ModulationState]:
    """Decompose an ordered series of (t, Field) slices.

    The renormalized time starts at s_0 = log(lambda_0^2) and advances by
    the integral of lambda^2 dt, so lambda e^{-s/2} is 1 at the first slice
    and flat whenever the self-similar law holds. Snapshots are usually too
    coarse for an accurate trapezoid of lambda^2; pass `time_series`
    = (t_array, amplitude_array) from the per-step solver log to integrate
    on the fine grid instead (the amplitude is the lambda^2 proxy).
    """
    from .solver import _refined_peak

    s_of_t = None
    if time_series is not None:
        tt = np.asarray(time_series[0], dtype=float)
        amp = np.asarray(time_series[1], dtype=float)
        s_grid = np.concatenate([[0.0], np.cumsum(0.5 * (amp[1:] + amp[:-1])
                                                  * np.diff(tt))])
        s_of_t = lambda t: float(np.interp(t, tt, s_grid))

    states = []
    prev_t = prev_lam = None
    s = s0_offset = None
    mu = mu_guess
    for t, field in snapshots:
        peak, y_star = _refined_peak(field.grid.nodes, field.values)
        lam = math.sqrt(peak)
        if mu is None:
            mu = _fwhm_mu(field, peak, y_star, lam)
        frame = to_parabolic_frame(field, lam, y_star)
        guess = ModulationState.from_parameters(math.nan, lam, mu, y_star)
        state, _ = decompose(frame, guess)
        if s is None:
            s = math.log(state.lambda_**2)
            if s_of_t is not None:
                s0_offset = s - s_of_t(t)
        elif s_of_t is not None:
            s = s0_offset + s_of_t(t)
        else:
            s += 0.5 * (state.lambda_**2 + prev_lam**2) * (t - prev_t)
        states.append(ModulationState(s, state.lambda_, state.mu, state.a,
                                      state.y_star, state.newton_residual))
        prev_t, prev_lam, mu = t, state.lambda_, state.mu
    return states


def modulation_residuals(states) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residuals of the leading-order parameter laws along a tracked series.

        r_lambda = lambda_s/lambda - 1/2 + 1/(4 lambda^4 mu^2)
        r_mu     = mu_s/mu - 1/(2 lambda^4 mu^2)

    Derivatives are nonuniform three-point differences in s; the returned
    arrays cover the interior slices (first and last are dropped).
    """
    if len(states) < 3:
        raise ParameterError("need at least 3 states for centered differences")
    s = np.array([st.s for st in states])
    lam = np.array([st.lambda_ for st in states])
    mu = np.array([st.mu for st in states])
    r_lam = np.empty(len(states) - 2)
    r_mu = np.empty(len(states) - 2)
    for i in range(1, len(states) - 1):
        w = fd_weights(s[i - 1:i + 2], s[i], 1)
        dlog_lam = float(w @ np.log(lam[i - 1:i + 2]))
        dlog_mu = float(w @ np.log(mu[i - 1:i + 2]))
        corr = 1.0 / (4.0 * lam[i] ** 4 * mu[i] ** 2)
        r_lam[i - 1] = dlog_lam - 0.5 + corr
        r_mu[i - 1] = dlog_mu - 2.0 * corr
    return s[1:-1], r_lam, r_mu


@dataclass(frozen=True)
class DiagnosticsWeights:
    """Bundle of the exterior-diagnostics evaluators: the shape function q,
    the weight w(s, Z) and the vector field A(Z)."""

    def q(self, Z):
        return shape_q(Z)

    def w(self, s, Z):
        return weight_w(s, Z)

    def A(self, Z):
        return vector_A(Z)


def shape_q(Z) -> np.ndarray | float:
    """q(Z) = sin(|Z|/2) for |Z| <= pi, then 1: q(0) = 0, strictly
    increasing on (0, pi), flat beyond."""
    Z = np.asarray(Z, dtype=float)
    out = np.where(np.abs(Z) <= math.pi, np.sin(np.abs(Z) / 2.0), 1.0)
    return out if out.ndim else float(out)


def weight_w(s: float, Z) -> np.ndarray | float:
    """The anisotropic exterior weight; even in Z, continuous at |Z| = pi,
    equal to 1/s outside the profile support, nonincreasing in s."""
    if s < math.e:
        raise ParameterError("the weight needs s >= e")
    Z_arr = np.atleast_1d(np.asarray(Z, dtype=float))
    if np.any(Z_arr == 0.0):
        raise SingularPointError("w blows up like |Z|^-7 at Z = 0")
    az = np.abs(Z_arr)
    out = np.full_like(az, 1.0 / s)
    inside = az < math.pi
    a = az[inside]
    # half-angle forms keep 1 +- cos Z accurate at both endpoints; near the
    # edge both the (pi - Z)^3 factor and cos(Z/2) are computed from the
    # same difference d so its rounding cancels in their ratio
    d = math.pi - a
    sin_half = np.where(a <= math.pi / 2.0, np.sin(a / 2.0), np.cos(d / 2.0))
    cos_half = np.where(a <= math.pi / 2.0, np.cos(a / 2.0), np.sin(d / 2.0))
    # w = (1+cos)/( (1-cos) sin^5 ) * 4 (pi-|Z|)^3 / s^q, all in half angles
    out[inside] = d**3 / (8.0 * sin_half**7 * cos_half**3) * s ** (-shape_q(a))
    return out if np.ndim(Z) else float(out[0])


def vector_A(Z) -> np.ndarray | float:
    """A(Z) = sin Z on [-pi/2, pi/2], +-1 beyond; |A| is comparable to |Z|
    on the profile support."""
    Z_arr = np.asarray(Z, dtype=float)
    out = np.sin(np.clip(Z_arr, -math.pi / 2.0, math.pi / 2.0))
    return out if out.ndim else float(out)


def exterior_norms(u: Field, s: float, a: float, M: float
                   ) -> tuple[float, float, float, float]:
    """The four weighted exterior integrals of the trapped-regime template:
    int u^2 w and int |A d_Z u|^2 w over [-pi - a, -M e^-s] and [M e^-s, inf),
    by trapezoid on the field's Z grid."""
    Z = u.grid.nodes
    cut = M * math.exp(-s)
    du = derivative(u, 1).values
    Av = vector_A(Z) * du

    def integrate(vals, lo, hi):
        m = (Z >= lo) & (Z <= hi) & (Z != 0.0)
        if np.count_nonzero(m) < 2:
            return 0.0
        return float(np.trapezoid(vals[m] ** 2 * weight_w(s, Z[m]), Z[m]))

    return (integrate(u.values, -math.pi - a, -cut),
            integrate(u.values, cut, np.inf),
            integrate(Av, -math.pi - a, -cut),
            integrate(Av, cut, np.inf))


def transport_T(Z) -> np.ndarray | float:
    """T = -Z/2 + int_0^Z G_1: (sin Z)/2 inside the support, linear outside."""
    Z_arr = np.asarray(Z, dtype=float)
    inside = np.abs(Z_arr) <= math.pi
    out = np.where(inside, 0.5 * np.sin(Z_arr),
                   -0.5 * (Z_arr - np.sign(Z_arr) * math.pi))
    return out if out.ndim else float(out)


def potential_V(Z) -> np.ndarray | float:
    """V = 1 - 2 G_1: -cos Z inside the support, 1 outside."""
    Z_arr = np.asarray(Z, dtype=float)
    out = np.where(np.abs(Z_arr) <= math.pi, -np.cos(Z_arr), 1.0)
    return out if out.ndim else float(out)


def eigenfunction_phi(beta: float, Z: float) -> float:
    """Closed-form solution of T phi' + V phi = beta phi:
    ((1-cos Z)/(1+cos Z))^beta sin^2 Z inside, (|Z| - pi)^(2(1-beta)) outside."""
    az = abs(Z)
    if az == 0.0 or az == math.pi:
        raise ParameterError("phi_beta is evaluated away from 0 and +-pi")
    if az < math.pi:
        return ((1.0 - math.cos(Z)) / (1.0 + math.cos(Z))) ** beta \
            * math.sin(Z) ** 2
    return (az - math.pi) ** (2.0 * (1.0 - beta))


def _phi_derivative(beta: float, Z: float) -> float:
    az = abs(Z)
    if az < math.pi:
        # phi'/phi = (2 beta + 2 cos Z) / sin Z
        return eigenfunction_phi(beta, Z) * (2.0 * beta + 2.0 * math.cos(Z)) \
            / math.sin(Z)
    return 2.0 * (1.0 - beta) * (az - math.pi) ** (1.0 - 2.0 * beta) \
        * (1.0 if Z > 0 else -1.0)


def local_operator_checks(beta: float, Z: float) -> float:
    """|V phi_beta + T phi_beta' - beta phi_beta| with analytic derivatives;
    machine-zero for every beta and admissible Z."""
    phi = eigenfunction_phi(beta, Z)
    dphi = _phi_derivative(beta, Z)
    return abs(potential_V(Z) * phi + transport_T(Z) * dphi - beta * phi)


def frame_residual(snapshots, states, window: float = 5.0,
                   lambda_s_scale: float = 1.0) -> float:
    """Normalized residual of the full moving-frame equation

        f_s + (lambda_s/lambda)(2 + Y d_Y) f - f^2 + (d_Y^-1 f) d_Y f
            + (int_{-lambda y*}^0 f - lambda y*_s) d_Y f - f_YY = 0

    assembled from three consecutive slices (derivatives in s by centered
    differences). Returns sup over |Y| <= window of |residual| divided by
    the largest term, so 0.05 means the terms cancel to 5 percent.

    lambda_s_scale deliberately corrupts the measured lambda_s (diagnostic
    sensitivity checks)."""
    if len(snapshots) != 3 or len(states) != 3:
        raise ParameterError("need exactly three consecutive slices")
    (tm, fm), (t0, f0), (tp, fp) = snapshots
    sm, s0, sp = (st.s for st in states)
    lam = states[1].lambda_
    y_star = states[1].y_star

    n = 1001
    frames = [to_parabolic_frame(f, lam_j.lambda_, lam_j.y_star,
                                 half_width=window + 2.0, n=n).f
              for f, lam_j in zip((fm, f0, fp), states)]
    Y = np.linspace(-window, window, 801)
    vals = [np.interp(Y, fr.grid.nodes, fr.values) for fr in frames]

    w = fd_weights(np.array([sm, s0, sp]), s0, 1)
    f_s = w[0] * vals[0] + w[1] * vals[1] + w[2] * vals[2]
    lam_s_over_lam = float(w @ np.log([st.lambda_ for st in states]))
    lam_s_over_lam *= lambda_s_scale
    ystar_s = float(w @ np.array([st.y_star for st in states]))

    fmid = Field(Grid(Y), vals[1])
    df = derivative(fmid, 1).values
    d2f = derivative(fmid, 2).values
    cum = cumulative_integral(fmid).values
    cum = cum - np.interp(0.0, Y, cum)     # d_Y^-1 from Y = 0

    y = f0.grid.nodes
    xi_cum = cumulative_integral(f0).values
    total = float(np.interp(y_star, y, xi_cum)) / lam  # int_{-lambda y*}^0 f dY

    terms = [f_s,
             lam_s_over_lam * (2.0 * vals[1] + Y * df),
             -vals[1] ** 2,
             cum * df,
             (total - lam * ystar_s) * df,
             -d2f]
    residual = np.abs(sum(terms))
    scale = max(float(np.max(np.abs(tt))) for tt in terms)
    return float(np.max(residual) / max(scale, 1e-300))


def trapped_verdict(states, ext_norms, K: float = 100.0, M: float = 20.0,
                    nu: float = 0.01) -> dict:
    """Evaluate the trapped-regime inequality templates along a tracked run.

    The constants are report parameters (the theory only asserts existence
    of some large K, M); the verdict counts how many slices satisfy each
    template."""
    out = {"K": K, "M": M, "nu": nu, "n_slices": len(states)}
    lam_ok = mu_ok = a_ok = u_ok = du_ok = 0
    lam0 = states[0].lambda_ * math.exp(-states[0].s / 2.0)
    for st, norms in zip(states, ext_norms):
        grow = math.exp(st.s / 2.0) * lam0
        lam_ok += grow / K < st.lambda_ < grow * K
        mu_ok += 1.0 / K < st.mu < K
        a_ok += abs(st.a) < K * math.exp(-(0.5 - 2 * nu) * st.s)
        u_bound = K**2 * math.exp(-2.0 * (0.5 - nu) * st.s)
        du_bound = K**2 * math.exp(2.0 * nu * st.s)
        u_ok += norms[0] + norms[1] < u_bound
        du_ok += norms[2] + norms[3] < du_bound
    out.update(lambda_in_range=lam_ok, mu_in_range=mu_ok, a_in_range=a_ok,
               u_norms_in_range=u_ok, du_norms_in_range=du_ok)
    return out
