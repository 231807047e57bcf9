"""The exactly solvable nonlocal problem d_t u = int_0^x u.

Its Green kernel is the squared-factorial series k(y) = sum y^n/(n!)^2,
the scale-invariant solution of y k' = int_0^y k. Any datum evolves by
convolution with k; direct RK2 stepping must agree. The transported
variant v_t - int_0^x v + x v_x = 0 decays like e^{-ell t} on compact sets
when the datum vanishes to order ell at the origin.
"""

import numpy as np

from prandtl_lab.grid import Field, build_grid
from prandtl_lab.nonlocal_model import (green_solution, integrate_nonlocal,
                                        kernel, kernel_ode_check,
                                        kernel_primitive,
                                        transported_solution)

print("kernel values: k(0) = %.1f, k(1) = %.10f" % (kernel(0.0), kernel(1.0)))
for y in (1.0, 10.0, 100.0):
    print(f"  ODE residual |y k' - int k| / k at y={y:5.1f}: "
          f"{kernel_ode_check(y) / kernel(y):.2e}")

g = build_grid(5.0, 801)
u0 = Field(g, np.exp(-((g.nodes - 2.0) ** 2)))
direct = integrate_nonlocal(u0, 1.0, dt=1e-3)
ref = green_solution(u0, 1.0, g)
rel = np.max(np.abs(direct.values - ref.values)) / np.max(np.abs(ref.values))
print(f"\nGreen solution vs direct stepping at t = 1: rel sup error {rel:.2e}")

lin = green_solution(Field(g, g.nodes.copy()), 1.3, g)
want = kernel_primitive(1, 1.3 * g.nodes) / 1.3
print(f"linear datum vs first primitive:           sup error {np.max(np.abs(lin.values - want)):.2e}")

v0 = Field(g, g.nodes**2 * np.exp(-g.nodes))   # vanishes to order 2
ts = np.linspace(2.5, 6.5, 9)
mask = g.nodes <= 3.0
sups = [np.max(np.abs(transported_solution(v0, t).values[mask])) for t in ts]
slope = np.polyfit(ts, np.log(sups), 1)[0]
print(f"compact-set decay slope for an order-2 datum: {slope:.3f} (expect -2)")
