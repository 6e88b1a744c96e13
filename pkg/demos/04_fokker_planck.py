"""
The law of the solution from three directions
=============================================

For constant coefficients the density of Y(t,x) solves a mixed-derivative
equation in (t,x) with y-derivatives up to order four.  We march it on the
lattice, then compare with the exact Gaussian and with Monte Carlo.
"""
import numpy as np

from sheetfield import Constant, ConfigurationError, GridSpec
from sheetfield.fokker_planck import (FpOperatorSpec, default_y_nodes, fp_march,
                                      fp_vs_monte_carlo, l1_error_vs_reference, mollified_delta,
                                      uniform_y_nodes)

grid = GridSpec(1.0, 1.0, 64, 64)
op = FpOperatorSpec(alpha=1.0, beta=1.0)
s0 = 0.3
y = default_y_nodes(op, grid, y0=0.0, h=0.05, s0=s0)
dens = fp_march(grid, op, y, mollified_delta(y, 0.0, s0))
print("L1 error at (1,1):", l1_error_vs_reference(dens, op, 1.0, 1.0, 0.0, s0))
print("mean, variance at (1,1):", dens.moments(64, 64), " exact (1, 1.09)")
print("diagnostics:", {k: dens.diagnostics[k] for k in ("mass_drift", "min_value", "goursat_residual")})

# %%
# The literal explicit update is unstable here: the fourth-order term is
# anti-diffusive, and the step-size guard refuses to run.
try:
    fp_march(grid, op, y, mollified_delta(y, 0.0, s0), scheme="explicit")
except ConfigurationError as e:
    print("explicit scheme:", e)

# %%
# Monte Carlo: 20,000 Euler paths smoothed with the same Gaussian width s0.
cmp = fp_vs_monte_carlo(grid, Constant(1.0, 1.0), M=20_000, seed=2, y_nodes=y, s0=s0)
print("L1(FP, MC) at (1,1):", cmp.l1[0])

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    plt.plot(y, dens.m[-1, -1], label="marched")
    plt.plot(y, cmp.mc_density[0], "--", label="Monte Carlo")
    plt.xlabel("y")
    plt.legend()
    plt.savefig("fokker_planck_11.png", dpi=120)
    print("wrote fokker_planck_11.png")
