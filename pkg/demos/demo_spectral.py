"""The Gaussian-weight Hermite machinery of the parabolic frame.

The drift operator L = -1 + (3/2) Y d_Y - d_YY has spectrum -1 + 3i/2 on
polynomial eigenfunctions; removing the three lowest modes leaves the
coercive gap ||d_Y eps||^2 >= (9/2) ||eps||^2.
"""

import numpy as np

from prandtl_lab.grid import Field, Grid
from prandtl_lab.spectral import (HermiteFrame, eigen_residual, eigenvalue,
                                  hermite, hermite_norm_sq, poincare_check,
                                  spectral_gap_check)

print(f"{'i':>2s} {'eigenvalue':>11s} {'FD residual':>12s} {'|h_i|^2':>10s}")
frame = HermiteFrame()
for i in range(7):
    print(f"{i:2d} {eigenvalue(i):11.2f} {eigen_residual(i):12.3e} "
          f"{hermite_norm_sq(i):10.1f}")

rng = np.random.default_rng(0)
Y = np.linspace(-8.0, 8.0, 4001)
ok = 0
for _ in range(50):
    vals = sum(c * hermite(i, Y) / hermite_norm_sq(i) ** 0.5
               for i, c in enumerate(rng.normal(size=9)))
    lhs, rhs = spectral_gap_check(Field(Grid(Y), vals), frame)
    ok += lhs >= rhs * (1 - 1e-6)
print(f"\nspectral gap holds on {ok}/50 random band-limited fields")

Yw = np.linspace(-16.0, 16.0, 3201)
lhs, rhs = poincare_check(Field(Grid(Yw), np.ones(Yw.size)))
print(f"Poincare bound for eps = 1: {lhs:.4f} <= {rhs:.4f} "
      f"(second moment vs 4 int + 16 int |d eps|^2)")
