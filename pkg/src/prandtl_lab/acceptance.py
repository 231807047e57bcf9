"""End-to-end verification suite.

Each criterion function measures one quantitative claim of the blow-up
description at its pinned tolerance and returns a structured result; the
heavyweight pieces (the lambda0 = 4 simulation to amplitude 1e5 and its
modulation tracking) are computed once and shared. `run_all` executes the
whole suite, optionally running the independent fast criteria on a small
thread pool (PRANDTL_LAB_THREADS caps the worker count), and always
reports results in criterion order.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.integrate import quad

from .grid import Field, Grid, build_grid
from .modulation import (ModulationState, decompose, modulation_residuals,
                         shape_q, to_parabolic_frame, track, vector_A,
                         weight_w)
from .nonlocal_model import (green_solution, integrate_nonlocal, kernel,
                             kernel_ode_check, transported_solution)
from .profiles import (build_profile, fit_center_asymptotics,
                       fit_edge_asymptotics, g1_exact, profile_residual,
                       support_half_width)
from .solver import (SolverConfig, compact_regularity_probe, fit_blowup,
                     rescaled_snapshot, run_until_blowup)
from .spectral import (HermiteFrame, eigen_residual, hermite,
                       hermite_norm_sq, poincare_check, spectral_gap_check)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime: float
    limit_seconds: float | None
    details: dict = dataclass_field(default_factory=dict)

    def row(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status:4s}  {self.name:34s} {self.runtime:8.2f} s"


def _result(name, limit, started, checks: dict, details: dict) -> CriterionResult:
    passed = all(bool(v) for v in checks.values())
    details = dict(details)
    details["checks"] = {k: bool(v) for k, v in checks.items()}
    return CriterionResult(name, passed, time.perf_counter() - started,
                           limit, details)


def criterion_profile_exactness() -> CriterionResult:
    """1: the k = 1 table reproduces cos^2(Z/2) to 1e-8 in sup norm."""
    started = time.perf_counter()
    table = build_profile(1, n=4096, tol=1e-9)
    Z = np.linspace(0.0, np.pi, 20001)
    dev = float(np.max(np.abs(table.evaluate(Z) - g1_exact(Z))))
    return _result("profile exactness (k=1)", 1.0, started,
                   {"sup_dev <= 1e-8": dev <= 1e-8},
                   {"sup_dev": dev})


def criterion_support_constants() -> CriterionResult:
    """2: a_k agrees with the quadrature oracle to 1e-10 for k = 1..6."""
    started = time.perf_counter()
    rel_errors = {}
    for k in range(1, 7):
        lower = quad(lambda x: x ** (-(1 - 1 / (2 * k))) / (1 + x), 0.0, 1.0,
                     epsabs=1e-14, epsrel=1e-13)[0]
        upper = quad(lambda u: u ** (-1 / (2 * k)) / (1 + u), 0.0, 1.0,
                     epsabs=1e-14, epsrel=1e-13)[0]
        oracle = lower + upper
        rel_errors[k] = abs(support_half_width(k) - oracle) / oracle
    worst = max(rel_errors.values())
    return _result("support constants (k=1..6)", 1.0, started,
                   {"rel_err <= 1e-10": worst <= 1e-10,
                    "a_1 == pi": support_half_width(1) == np.pi},
                   {"rel_errors": {str(k): v for k, v in rel_errors.items()}})


def criterion_profile_asymptotics() -> CriterionResult:
    """3: center/edge exponents and the center coefficient for k = 2, 3."""
    started = time.perf_counter()
    details, checks = {}, {}
    for k in (2, 3):
        table = build_profile(k, n=8192, tol=1e-9)
        c_slope, c_coeff = fit_center_asymptotics(table)
        e_slope, _ = fit_edge_asymptotics(table)
        want_coeff = (2 * k) ** (-2 * k)
        want_edge = 2 * k / (2 * k - 1)
        checks[f"k={k} center exponent 1%"] = abs(c_slope - 2 * k) / (2 * k) <= 0.01
        checks[f"k={k} center coeff 2%"] = abs(c_coeff - want_coeff) / want_coeff <= 0.02
        checks[f"k={k} edge exponent 1%"] = abs(e_slope - want_edge) / want_edge <= 0.01
        details[f"k={k}"] = {"center_slope": c_slope, "center_coeff": c_coeff,
                             "edge_slope": e_slope}
    return _result("profile asymptotics (k=2,3)", 5.0, started, checks, details)


def criterion_profile_equation_residual() -> CriterionResult:
    """4: stationary-equation residual <= 1e-6 on the interior window."""
    started = time.perf_counter()
    checks, details = {}, {}
    for k in (1, 2, 3):
        table = build_profile(k, n=8192, tol=1e-9)
        res = profile_residual(table)
        checks[f"k={k} residual <= 1e-6"] = res <= 1e-6
        details[f"k={k}"] = res
    return _result("profile equation residual", 5.0, started, checks, details)


def criterion_spectrum() -> CriterionResult:
    """5: eigen-residuals of L h_i for i <= 6 and the low Hermite norms."""
    started = time.perf_counter()
    frame = HermiteFrame()
    residuals = {i: eigen_residual(i) for i in range(7)}
    norms = {i: frame.hermite_norm_sq_quadrature(i) for i in range(3)}
    checks = {"eigen residuals <= 1e-4": max(residuals.values()) <= 1e-4}
    for i, want in ((0, 1.0), (1, 2.0), (2, 8.0)):
        checks[f"|h_{i}|^2 = {want:g} +- 1e-8"] = abs(norms[i] - want) <= 1e-8
    return _result("spectrum of L", 5.0, started, checks,
                   {"residuals": {str(i): v for i, v in residuals.items()},
                    "norms": {str(i): v for i, v in norms.items()}})


def acceptance_simulation() -> "RunResult":
    """The shared blow-up run: lambda0 = 4, no perturbation, threshold 1e5,
    default cfl 0.2 and remesh policy."""
    cfg = SolverConfig(lambda0=4.0, blowup_threshold=1.0e5, max_steps=800_000)
    return run_until_blowup(cfg)


def track_simulation(sim) -> list:
    return track(sim.snapshots, time_series=(sim.t, sim.peak_value))


def criterion_blowup_rates(sim) -> CriterionResult:
    """6: amplitude exponent -1 +- 0.05 (R^2 >= 0.999), peak-trajectory
    exponent -1/2 +- 0.05 (R^2 >= 0.99), late profile within 5% of
    cos^2(Z/2) on |Z| <= 0.9 pi."""
    started = time.perf_counter()
    fit = fit_blowup(sim.t, sim.peak_value, sim.peak_location)
    snap = rescaled_snapshot(sim.final_state, fit)
    m = np.abs(snap.grid.nodes) <= 0.9 * math.pi
    dev = float(np.max(np.abs(snap.values - g1_exact(snap.grid.nodes))[m]))
    checks = {
        "blown up": sim.blown_up,
        "amp exponent -1 +- 0.05": abs(fit.amp_exponent + 1.0) <= 0.05,
        "amp R2 >= 0.999": fit.r2_amp >= 0.999,
        "peak exponent -1/2 +- 0.05": abs(fit.peak_exponent + 0.5) <= 0.05,
        "peak R2 >= 0.99": fit.r2_peak >= 0.99,
        "late profile within 5%": dev <= 0.05,
    }
    return _result("blow-up rates and profile", None, started, checks,
                   {"T_est": fit.T_est, "amp_exponent": fit.amp_exponent,
                    "peak_exponent": fit.peak_exponent, "r2_amp": fit.r2_amp,
                    "r2_peak": fit.r2_peak, "profile_dev": dev,
                    "steps": int(sim.final_state.step_count)})


def criterion_final_profile_quadratic(sim, states) -> CriterionResult:
    """7: the final slice follows c y^2 on an intermediate window (log-log
    exponent 2 +- 0.1) and 1/(2 sqrt(c)) matches the tracked mu within 10%."""
    started = time.perf_counter()
    probe = compact_regularity_probe(sim)
    mu_end = states[-1].mu
    rel = abs(probe.mu_proxy - mu_end) / mu_end
    checks = {
        "quadratic exponent 2 +- 0.1": 1.9 <= probe.quad_exponent <= 2.1,
        "mu proxy within 10%": rel <= 0.10,
        "bounded on the compact window": probe.late_sup_xi <= probe.sup_xi + 1e-12,
    }
    return _result("final-profile quadratic law", None, started, checks,
                   {"quad_exponent": probe.quad_exponent,
                    "mu_proxy": probe.mu_proxy, "mu_modulation": mu_end,
                    "rel_difference": rel})


def criterion_modulation_laws(sim, states) -> CriterionResult:
    """8: planted decomposition recovers parameters to 1e-8 with
    orthogonality residuals <= 1e-10; on the simulation |r_mu| decays by a
    factor >= 3 between the first and last thirds and lambda e^{-s/2}
    stabilizes within 5%."""
    started = time.perf_counter()
    # synthetic planted slice, decomposition-frame convention
    g = build_grid(60.0, 24001)
    lam_t, mu_t, ys_t = 1.0 + 1e-3, 1.2, 30.05
    vals = lam_t**2 * g1_exact((g.nodes - ys_t) / (lam_t * mu_t)) \
        + 1e-4 * hermite(3, g.nodes - ys_t)
    st, eps = decompose(to_parabolic_frame(Field(g, vals), 1.0, 30.0),
                        ModulationState.from_parameters(0.0, 1.0, 1.1, 30.0))
    param_err = max(abs(st.lambda_ - lam_t), abs(st.mu - mu_t),
                    abs(st.y_star - ys_t))
    from .spectral import rho
    Yq = eps.grid.nodes
    orth = max(abs(float(np.trapezoid(eps.values * hermite(i, Yq) * rho(Yq), Yq)))
               for i in range(3))

    s = np.array([x.s for x in states])
    lam = np.array([x.lambda_ for x in states])
    ratio = lam * np.exp(-s / 2.0)
    mid = len(states) // 2
    stab = abs(ratio[-1] - ratio[mid]) / ratio[-1]
    _, _, r_mu = modulation_residuals(states)
    third = len(r_mu) // 3
    decay = float(np.mean(np.abs(r_mu[:third])) / np.mean(np.abs(r_mu[-third:])))
    checks = {
        "planted parameters to 1e-8": param_err <= 1e-8,
        "orthogonality <= 1e-10": orth <= 1e-10,
        "r_mu decays by >= 3": decay >= 3.0,
        "lambda e^{-s/2} within 5%": stab <= 0.05,
    }
    return _result("modulation laws", 60.0, started, checks,
                   {"param_err": param_err, "orthogonality": orth,
                    "r_mu_decay_factor": decay, "lambda_stabilization": stab})


def criterion_nonlocal_oracles() -> CriterionResult:
    """9: Green solution vs direct stepping to 1e-4 for three data, kernel
    ODE residual <= 1e-12, and the ell = 2 compact decay slope -2 +- 10%."""
    started = time.perf_counter()
    g = build_grid(5.0, 801)
    data = {
        "step": np.ones(g.n),
        "gaussian": np.exp(-((g.nodes - 2.0) ** 2)),
        "quadratic": 1.0 + 0.3 * g.nodes**2,
    }
    agreement = {}
    for name, vals in data.items():
        u0 = Field(g, vals)
        direct = integrate_nonlocal(u0, 1.0, dt=1e-3)
        ref = green_solution(u0, 1.0, g)
        agreement[name] = float(np.max(np.abs(direct.values - ref.values))
                                / np.max(np.abs(ref.values)))
    ode_residuals = {y: kernel_ode_check(y) / kernel(y) for y in (1.0, 5.0, 20.0)}
    v0 = Field(g, g.nodes**2 * np.exp(-g.nodes))
    ts = np.linspace(2.5, 6.5, 9)
    mask = g.nodes <= 3.0
    sups = [float(np.max(np.abs(transported_solution(v0, t).values[mask])))
            for t in ts]
    slope = float(np.polyfit(ts, np.log(sups), 1)[0])
    checks = {
        "green vs direct <= 1e-4": max(agreement.values()) <= 1e-4,
        "kernel ODE residual <= 1e-12": max(ode_residuals.values()) <= 1e-12,
        "ell=2 decay slope -2 +- 10%": abs(slope + 2.0) / 2.0 <= 0.10,
    }
    return _result("nonlocal model oracles", 30.0, started, checks,
                   {"oracle_agreement": agreement, "decay_slope": slope,
                    "ode_residuals": {f"{k:g}": v
                                      for k, v in ode_residuals.items()}})


def criterion_property_suites() -> CriterionResult:
    """10: the Gaussian-weight Poincare bound (constants 4 and 16) and the
    spectral-gap bound on 100 random fields each; weight and vector-field
    invariants on dense samples."""
    started = time.perf_counter()
    rng = np.random.default_rng(123)
    frame = HermiteFrame()

    def random_field(half_width, n):
        Y = np.linspace(-half_width, half_width, n)
        vals = sum(c * hermite(i, Y) / hermite_norm_sq(i) ** 0.5
                   for i, c in enumerate(rng.normal(size=9)))
        return Field(Grid(Y), vals)

    poincare_ok = 0
    for _ in range(100):
        lhs, rhs = poincare_check(random_field(16.0, 3201))
        poincare_ok += lhs <= rhs
    gap_ok = 0
    for _ in range(100):
        lhs, rhs = spectral_gap_check(random_field(8.0, 4001), frame)
        gap_ok += lhs >= rhs * (1.0 - 1e-6)

    eps = 3e-4
    w_cont = max(
        abs((4.0 * weight_w(s, math.pi - eps)
             - weight_w(s, math.pi - 2 * eps)) / 3.0 - 1.0 / s) * s
        for s in (3.0, 10.0, 100.0))
    Z = np.linspace(1e-3, 0.999 * math.pi, 5000)
    w_s_monotone = bool(np.all(weight_w(20.0 + 1e-6, Z) <= weight_w(20.0, Z)))
    ratio = vector_A(Z) / Z
    a_bounds = bool(np.all(ratio >= 1.0 / math.pi - 1e-12)
                    and np.all(ratio <= 1.0))
    q_ok = shape_q(0.0) == 0.0 and bool(np.all(np.diff(shape_q(Z)) > 0))
    checks = {
        "poincare holds on 100 fields": poincare_ok == 100,
        "spectral gap holds on 100 fields": gap_ok == 100,
        "w continuous at pi to 1e-12": w_cont <= 1e-12,
        "w nonincreasing in s": w_s_monotone,
        "|A| comparable to |Z|": a_bounds,
        "shape function admissible": q_ok,
    }
    return _result("property suites", 30.0, started, checks,
                   {"poincare_pass": poincare_ok, "gap_pass": gap_ok,
                    "w_continuity": w_cont})


def worker_count() -> int:
    cap = os.environ.get("PRANDTL_LAB_THREADS")
    if cap:
        return max(1, int(cap))
    return min(4, os.cpu_count() or 1)


def run_all(sim=None, states=None) -> list[CriterionResult]:
    """Run every criterion; the simulation is reused when provided."""
    fast = [criterion_profile_exactness, criterion_support_constants,
            criterion_profile_asymptotics, criterion_profile_equation_residual,
            criterion_spectrum, criterion_nonlocal_oracles,
            criterion_property_suites]
    n_workers = worker_count()
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            fast_results = list(pool.map(lambda f: f(), fast))
    else:
        fast_results = [f() for f in fast]
    if sim is None:
        sim = acceptance_simulation()
    if states is None:
        states = track_simulation(sim)
    sim_results = [criterion_blowup_rates(sim),
                   criterion_final_profile_quadratic(sim, states),
                   criterion_modulation_laws(sim, states)]
    order = ["profile exactness (k=1)", "support constants (k=1..6)",
             "profile asymptotics (k=2,3)", "profile equation residual",
             "spectrum of L", "blow-up rates and profile",
             "final-profile quadratic law", "modulation laws",
             "nonlocal model oracles", "property suites"]
    merged = {r.name: r for r in fast_results + sim_results}
    return [merged[name] for name in order]
