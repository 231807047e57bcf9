"""Command-line front end.

Subcommands: profile, spectral-check, simulate, modulate, nonlocal-check,
accept. Outputs are deterministic given (config, seed): CSV data files,
JSON reports carrying the config/seed/version envelope, and standalone
matplotlib scripts (written, never executed). Exit codes: 0 success,
1 usage error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import __version__, acceptance
from .errors import PrandtlLabError
from .grid import Field, Grid, build_grid
from .modulation import exterior_norms, modulation_residuals, track, trapped_verdict
from .nonlocal_model import (green_solution, integrate_nonlocal, kernel,
                             kernel_primitive, transported_solution)
from .profiles import (build_profile, fit_center_asymptotics,
                       fit_edge_asymptotics, g1_exact, support_half_width)
from .reports import (coerce, parse_config_file, read_csv, timed, write_csv,
                      write_report)
from .solver import (SolverConfig, compact_regularity_probe, fit_blowup,
                     make_state, rescaled_snapshot, run_until_blowup)
from .spectral import HermiteFrame, eigen_residual, eigenvalue


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    p = _Parser(prog="prandtl-lab",
                description="blow-up laboratory for the reduced 1D "
                            "boundary-layer trace equation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("profile", help="tabulate a self-similar profile")
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--points", type=int, default=4096)
    q.add_argument("--tol", type=float, default=1e-9)
    q.add_argument("--out", required=True, help="CSV path (columns Z, G, dG)")
    q.add_argument("--report", default=None, help="JSON report path (default stdout)")

    q = sub.add_parser("spectral-check", help="eigenbasis and inequality checks")
    q.add_argument("--max-index", type=int, default=8)
    q.add_argument("--trials", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out-dir", default=None)

    q = sub.add_parser("simulate", help="run the blow-up simulation")
    # flags default to None so config-file values are only overridden when
    # a flag is given explicitly; cfl defaults to 0.2 via SolverConfig
    q.add_argument("--lambda0", type=float, default=None)
    q.add_argument("--cfl", type=float, default=None)
    q.add_argument("--threshold", type=float, default=None)
    q.add_argument("--nodes", type=int, default=None)
    q.add_argument("--max-steps", type=int, default=None)
    q.add_argument("--snapshot-every", type=float, default=None,
                   help="amplitude ratio between stored snapshots")
    q.add_argument("--perturb-amplitude", type=float, default=None)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--config", default=None, help="flat key=value config file")
    q.add_argument("--out-dir", required=True)

    q = sub.add_parser("modulate", help="extract modulation parameters from "
                                        "a simulation output directory")
    q.add_argument("--run-dir", required=True)
    q.add_argument("--out-dir", required=True)
    q.add_argument("--K", type=float, default=100.0)
    q.add_argument("--M", type=float, default=20.0)
    q.add_argument("--nu", type=float, default=0.01)

    q = sub.add_parser("nonlocal-check", help="Green kernel cross-checks")
    q.add_argument("--x-max", type=float, default=5.0)
    q.add_argument("--nodes", type=int, default=801)
    q.add_argument("--dt", type=float, default=1e-3)
    q.add_argument("--out-dir", required=True)

    q = sub.add_parser("accept", help="run the acceptance suite")
    q.add_argument("--out-dir", default=None)
    return p


def _cmd_profile(args) -> int:
    with timed() as clock:
        table = build_profile(args.k, n=args.points, tol=args.tol)
        u = table.u_samples
        two_k = 2 * table.k
        dG = -np.where(table.Z_samples > 0,
                       u ** (two_k - 1) / (1.0 + u**two_k), 0.0)
        write_csv(args.out, {"Z": table.Z_samples, "G": table.G_samples,
                             "dG": dG})
        report = {
            "k": table.k,
            "a_k": table.a_k,
            "center_coeff": table.center_coeff,
            "edge_coeff": table.edge_coeff,
            "edge_exponent": table.edge_exponent,
            "mass": float(np.trapezoid(table.G_samples, table.Z_samples)),
            # printed elsewhere but inconsistent with G_1 = cos^2(Z/2);
            # kept in the report for comparison
            "rejected_constant_variants": {
                "a_k": math.pi / (2 * args.k * math.sin(math.pi / (2 * args.k))),
                "center_coeff": 1.0,
                "edge_coeff": (2 * args.k - 1) ** (1 + 1.0 / (2 * args.k - 1)),
            },
        }
        if args.k >= 2:
            try:
                c_slope, c_coeff = fit_center_asymptotics(table)
                e_slope, e_coeff = fit_edge_asymptotics(table)
                report["fit_errors"] = {
                    "center_exponent": abs(c_slope - 2 * args.k),
                    "center_coeff": abs(c_coeff - table.center_coeff),
                    "edge_exponent": abs(e_slope - table.edge_exponent),
                    "edge_coeff": abs(e_coeff - table.edge_coeff),
                }
            except PrandtlLabError as exc:
                report["fit_errors"] = None
                report["fit_note"] = f"asymptotic fits skipped: {exc}"
    cfg = {"k": args.k, "points": args.points, "tol": args.tol}
    if args.report:
        write_report(args.report, report, cfg, None, clock["elapsed"])
    else:
        import json
        print(json.dumps(report, indent=2, sort_keys=True, default=float))
    return 0


def _cmd_spectral_check(args) -> int:
    from .spectral import hermite, hermite_norm_sq, poincare_check, spectral_gap_check

    with timed() as clock:
        rows = [(i, eigenvalue(i), eigen_residual(i))
                for i in range(args.max_index + 1)]
        print(f"{'i':>3s} {'eigenvalue':>12s} {'residual':>12s}")
        for i, ev, res in rows:
            print(f"{i:3d} {ev:12.4f} {res:12.3e}")
        rng = np.random.default_rng(args.seed)
        frame = HermiteFrame()
        poincare_pass = gap_pass = 0
        for _ in range(args.trials):
            Y = np.linspace(-16.0, 16.0, 3201)
            vals = sum(c * hermite(i, Y) / hermite_norm_sq(i) ** 0.5
                       for i, c in enumerate(rng.normal(size=9)))
            lhs, rhs = poincare_check(Field(Grid(Y), vals))
            poincare_pass += lhs <= rhs
            Y = np.linspace(-8.0, 8.0, 4001)
            vals = sum(c * hermite(i, Y) / hermite_norm_sq(i) ** 0.5
                       for i, c in enumerate(rng.normal(size=9)))
            lhs, rhs = spectral_gap_check(Field(Grid(Y), vals), frame)
            gap_pass += lhs >= rhs * (1 - 1e-6)
    payload = {
        "eigen_residuals": {str(i): res for i, _, res in rows},
        "poincare_pass": poincare_pass,
        "spectral_gap_pass": gap_pass,
        "trials": args.trials,
    }
    cfg = {"max_index": args.max_index, "trials": args.trials}
    if args.out_dir:
        write_report(os.path.join(args.out_dir, "spectral_check.json"),
                     payload, cfg, args.seed, clock["elapsed"])
    else:
        import json
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if poincare_pass == args.trials and gap_pass == args.trials else 2


def _solver_config_from_args(args) -> SolverConfig:
    overrides = {}
    if args.config:
        raw = parse_config_file(args.config)
        defaults = SolverConfig()
        for key, value in raw.items():
            if not hasattr(defaults, key):
                raise UsageError(f"unknown config key {key!r}")
            overrides[key] = coerce(value, getattr(defaults, key))
    flags = {
        "lambda0": args.lambda0,
        "cfl": args.cfl,
        "blowup_threshold": args.threshold,
        "n_nodes": args.nodes,
        "max_steps": args.max_steps,
        "snapshot_factor": args.snapshot_every,
        "perturb_amplitude": args.perturb_amplitude,
        "perturb_seed": args.seed,
    }
    # command-line flags override file values only when explicitly set;
    # argparse defaults fill the rest
    merged = dict(overrides)
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    if merged.get("blowup_threshold") is None:
        merged.pop("blowup_threshold", None)
    return SolverConfig(**merged)


def _cmd_simulate(args) -> int:
    cfg = _solver_config_from_args(args)
    with timed() as clock:
        result = run_until_blowup(cfg)
        out = args.out_dir
        write_csv(os.path.join(out, "series.csv"), {
            "t": result.t, "dt": result.dt, "peak_value": result.peak_value,
            "peak_location": result.peak_location, "mass": result.mass,
            "boundary_slope": result.boundary_slope,
        })
        index = {"index": [], "t": [], "peak_value": []}
        for i, (t, field) in enumerate(result.snapshots):
            write_csv(os.path.join(out, f"snapshot_{i:04d}.csv"),
                      {"y": field.grid.nodes, "xi": field.values})
            index["index"].append(i)
            index["t"].append(t)
            index["peak_value"].append(float(np.max(field.values)))
        write_csv(os.path.join(out, "snapshots_index.csv"), index)
        payload = {"blown_up": result.blown_up,
                   "remesh_count": result.remesh_count,
                   "steps": int(result.final_state.step_count)}
        if result.blown_up:
            fit = fit_blowup(result.t, result.peak_value, result.peak_location)
            payload["fit"] = {
                "T_est": fit.T_est, "amp_exponent": fit.amp_exponent,
                "peak_exponent": fit.peak_exponent,
                "r2_amp": fit.r2_amp, "r2_peak": fit.r2_peak,
            }
            snap = rescaled_snapshot(result.final_state, fit)
            write_csv(os.path.join(out, "rescaled_profile.csv"),
                      {"Z": snap.grid.nodes, "F": snap.values,
                       "G1": g1_exact(snap.grid.nodes)})
            probe = compact_regularity_probe(result)
            payload["regularity_probe"] = {
                "quad_exponent": probe.quad_exponent,
                "mu_proxy": probe.mu_proxy,
                "sup_xi_compact": probe.sup_xi,
            }
            emit_plot_script([os.path.join(out, "rescaled_profile.csv")],
                             "profile", os.path.join(out, "plot_profile.py"))
        emit_plot_script([os.path.join(out, "series.csv")], "rates",
                         os.path.join(out, "plot_rates.py"),
                         extra={"T_est": payload.get("fit", {}).get("T_est")})
    config_dict = {k: getattr(cfg, k) for k in (
        "lambda0", "cfl", "n_nodes", "max_steps", "snapshot_factor",
        "perturb_amplitude", "perturb_seed")}
    config_dict["blowup_threshold"] = cfg.threshold
    write_report(os.path.join(args.out_dir, "fit_report.json"), payload,
                 config_dict, args.seed, clock["elapsed"])
    return 0 if result.blown_up else 2


def _cmd_modulate(args) -> int:
    with timed() as clock:
        index = read_csv(os.path.join(args.run_dir, "snapshots_index.csv"))
        series = read_csv(os.path.join(args.run_dir, "series.csv"))
        snapshots = []
        for i, t in zip(index["index"].astype(int), index["t"]):
            data = read_csv(os.path.join(args.run_dir, f"snapshot_{i:04d}.csv"))
            snapshots.append((float(t), Field(Grid(data["y"]), data["xi"])))
        states = track(snapshots, time_series=(series["t"], series["peak_value"]))
        s_mid, r_lam, r_mu = modulation_residuals(states)
        norms = []
        for (t, field), st in zip(snapshots, states):
            snap = rescaled_snapshot(make_state(t, 0.0, field))
            u = snap.with_values(snap.values - g1_exact(snap.grid.nodes))
            norms.append(exterior_norms(u, max(st.s, math.e), st.a, args.M))
        pad = [math.nan]
        write_csv(os.path.join(args.out_dir, "modulation.csv"), {
            "s": [st.s for st in states],
            "t": [t for t, _ in snapshots],
            "lambda": [st.lambda_ for st in states],
            "mu": [st.mu for st in states],
            "a": [st.a for st in states],
            "y_star": [st.y_star for st in states],
            "newton_residual": [st.newton_residual for st in states],
            "r_lambda": pad + list(r_lam) + pad,
            "r_mu": pad + list(r_mu) + pad,
            "ext_norm_1": [n[0] for n in norms],
            "ext_norm_2": [n[1] for n in norms],
            "ext_norm_3": [n[2] for n in norms],
            "ext_norm_4": [n[3] for n in norms],
        })
        verdict = trapped_verdict(states, norms, K=args.K, M=args.M, nu=args.nu)
    cfg = {"run_dir": args.run_dir, "K": args.K, "M": args.M, "nu": args.nu}
    write_report(os.path.join(args.out_dir, "trapped_verdict.json"),
                 verdict, cfg, None, clock["elapsed"])
    return 0


def _cmd_nonlocal_check(args) -> int:
    with timed() as clock:
        g = build_grid(args.x_max, args.nodes)
        y = np.linspace(0.0, 10.0, 201)
        write_csv(os.path.join(args.out_dir, "kernel.csv"),
                  {"y": y, "k": kernel(y), "k_prim1": kernel_primitive(1, y)})
        u0 = Field(g, np.ones(g.n))
        direct = integrate_nonlocal(u0, 1.0, dt=args.dt)
        ref = green_solution(u0, 1.0, g)
        write_csv(os.path.join(args.out_dir, "comparison.csv"),
                  {"x": g.nodes, "green": ref.values, "direct": direct.values,
                   "abs_err": np.abs(direct.values - ref.values)})
        v0 = Field(g, g.nodes**2 * np.exp(-g.nodes))
        ts = np.linspace(2.5, 6.5, 9)
        mask = g.nodes <= 3.0
        sups = [float(np.max(np.abs(transported_solution(v0, t).values[mask])))
                for t in ts]
        slopes = np.gradient(np.log(sups), ts)
        write_csv(os.path.join(args.out_dir, "decay.csv"),
                  {"t": ts, "sup_compact": sups, "fitted_slope": slopes})
        rel = float(np.max(np.abs(direct.values - ref.values))
                    / np.max(np.abs(ref.values)))
        slope = float(np.polyfit(ts, np.log(sups), 1)[0])
        payload = {
            "oracle_agreement": rel,
            "decay_slope": slope,
            "verdicts": {
                "green_vs_direct_1e-4": rel <= 1e-4,
                "decay_slope_minus2_10pct": abs(slope + 2.0) / 2.0 <= 0.10,
            },
        }
        emit_plot_script([os.path.join(args.out_dir, "kernel.csv")], "kernel",
                         os.path.join(args.out_dir, "plot_kernel.py"))
    cfg = {"x_max": args.x_max, "nodes": args.nodes, "dt": args.dt}
    write_report(os.path.join(args.out_dir, "nonlocal_check.json"),
                 payload, cfg, None, clock["elapsed"])
    return 0 if all(payload["verdicts"].values()) else 2


def _cmd_accept(args) -> int:
    started = time.perf_counter()
    results = acceptance.run_all()
    print(f"{'status':6s} {'criterion':34s} {'runtime':>10s}")
    for r in results:
        print(r.row())
    ok = all(r.passed for r in results)
    print(f"{'ALL PASS' if ok else 'FAILURES PRESENT'} "
          f"({time.perf_counter() - started:.1f} s total)")
    if args.out_dir:
        payload = {r.name: {"passed": r.passed, "runtime": r.runtime,
                            "details": r.details} for r in results}
        write_report(os.path.join(args.out_dir, "acceptance.json"), payload,
                     {}, None, time.perf_counter() - started)
    return 0 if ok else 2


_PLOT_TEMPLATES = {
    "rates": '''\
"""Log-log blow-up rate plot for {csv0} (never run automatically)."""
import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt({csv0!r}, delimiter=",", names=True)
T_est = {T_est}
if T_est is None:
    slope, intercept = np.polyfit(data["t"], 1.0 / data["peak_value"], 1)
    T_est = -intercept / slope
tau = T_est - data["t"]
m = tau > 0
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].loglog(tau[m], data["peak_value"][m], label="peak value")
ax[0].loglog(tau[m], 1.0 / tau[m], "k--", label="slope -1 guide")
ax[0].set_xlabel("T - t"); ax[0].legend()
ax[1].loglog(tau[m], data["peak_location"][m], label="peak location")
ax[1].loglog(tau[m], data["peak_location"][m][-1] *
             (tau[m] / tau[m][-1]) ** -0.5, "k--", label="slope -1/2 guide")
ax[1].set_xlabel("T - t"); ax[1].legend()
fig.tight_layout()
plt.show()
''',
    "profile": '''\
"""Rescaled late-time profile against cos^2(Z/2) for {csv0}."""
import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt({csv0!r}, delimiter=",", names=True)
plt.plot(data["Z"], data["F"], label="rescaled snapshot")
plt.plot(data["Z"], data["G1"], "k--", label="cos^2(Z/2)")
plt.xlabel("Z"); plt.ylabel("F"); plt.legend()
plt.show()
''',
    "kernel": '''\
"""Green kernel growth plot for {csv0}."""
import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt({csv0!r}, delimiter=",", names=True)
plt.semilogy(data["y"], data["k"], label="k(y)")
plt.semilogy(data["y"], data["k_prim1"], label="first primitive")
plt.xlabel("y"); plt.legend()
plt.show()
''',
}


def emit_plot_script(csv_paths, kind: str, out_path: str,
                     extra: dict | None = None) -> str:
    """Write a standalone matplotlib script referencing the CSVs."""
    if kind not in _PLOT_TEMPLATES:
        raise UsageError(f"unknown plot kind {kind!r}")
    for p in csv_paths:
        if not os.path.isfile(p):
            raise FileNotFoundError(f"missing CSV {p}")
    values = {"csv0": csv_paths[0]}
    values.update(extra or {})
    if kind == "rates":
        values.setdefault("T_est", None)
    text = _PLOT_TEMPLATES[kind].format(**values)
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w") as fh:
        fh.write(text)
    return out_path


_COMMANDS = {
    "profile": _cmd_profile,
    "spectral-check": _cmd_spectral_check,
    "simulate": _cmd_simulate,
    "modulate": _cmd_modulate,
    "nonlocal-check": _cmd_nonlocal_check,
    "accept": _cmd_accept,
}


def run(argv=None) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:       # --version / -h print and exit cleanly
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (PrandtlLabError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
