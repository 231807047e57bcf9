"""Build the self-similar profile family and check its structure.

Each G_k is an even bump on [-a_k, a_k] with a_k = pi/sin(pi/2k), value 1
at the center, touching zero at the edges with exponent 2k/(2k-1). For
k = 1 the profile is exactly cos^2(Z/2).
"""

import numpy as np

from prandtl_lab.profiles import (build_profile, fit_center_asymptotics,
                                  fit_edge_asymptotics, g1_exact,
                                  profile_mass, profile_residual,
                                  support_half_width)

print(f"{'k':>2s} {'a_k':>10s} {'mass/a_k':>10s} {'residual':>10s} "
      f"{'center exp':>11s} {'edge exp':>9s}")
for k in (1, 2, 3, 4):
    table = build_profile(k, n=8192, tol=1e-9)
    mass = profile_mass(table)
    res = profile_residual(table)
    if k == 1:
        c_slope, e_slope = 2.0, 2.0       # exact cos^2 case
    else:
        c_slope, _ = fit_center_asymptotics(table)
        e_slope, _ = fit_edge_asymptotics(table)
    print(f"{k:2d} {table.a_k:10.6f} {mass / table.a_k:10.6f} {res:10.2e} "
          f"{c_slope:11.4f} {e_slope:9.4f}")
    assert abs(mass / table.a_k - (1 - 1 / (2 * k))) < 1e-5

table1 = build_profile(1, n=4096, tol=1e-9)
Z = np.linspace(0, np.pi, 10001)
dev = np.max(np.abs(table1.evaluate(Z) - g1_exact(Z)))
print(f"\nk=1 table vs cos^2(Z/2): sup deviation {dev:.2e}")
print(f"support half-widths: a_1 = {support_half_width(1):.10f} (pi), "
      f"a_3 = {support_half_width(3):.10f} (2 pi)")
