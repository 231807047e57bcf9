"""Numerical laboratory for finite-time blow-up of the reduced
one-dimensional boundary-layer trace equation

    xi_t - xi_yy - xi^2 + (int_0^y xi) xi_y = 0,    xi(t, 0) = 0.

Subpackages: grid (meshes and discrete calculus), profiles (self-similar
bump family G_k), spectral (Gaussian-weight Hermite machinery), solver
(IMEX time integration to blow-up), modulation (parameter extraction and
trapped-regime diagnostics), nonlocal_model (the exactly solvable nonlocal
toy problem), acceptance (the end-to-end verification suite), cli.
"""

__version__ = "0.1.0"

from .grid import Field, Grid, build_grid, cumulative_integral, derivative, interpolate, remesh
from .profiles import (Bump, GlueSpec, Plateau, ProfileTable, build_profile,
                       g1_exact, glue, profile_mass, profile_residual,
                       self_similar_residual, support_half_width)
from .solver import (BlowupFit, RunResult, SolverConfig, SolverState,
                     compact_regularity_probe, fit_blowup, initial_datum,
                     rescaled_snapshot, run_until_blowup, step)
from .spectral import (HermiteFrame, apply_L, hermite, poincare_check, rho,
                       spectral_gap_check)
from .modulation import (FrameFields, ModulationState, decompose,
                         exterior_norms, frame_residual,
                         local_operator_checks, modulation_residuals,
                         to_parabolic_frame, track, vector_A, weight_w)
from .nonlocal_model import (direct_step_nonlocal, green_solution, kernel,
                             kernel_ode_check, kernel_primitive,
                             transported_solution)

__all__ = [name for name in dir() if not name.startswith("_")]
