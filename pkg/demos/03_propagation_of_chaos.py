"""
Propagation of chaos for a space-time Ornstein-Uhlenbeck system
===============================================================

N particles, each driven by its own sheet, interact through the empirical
mean.  As N grows particle 1 decouples into the mean-field limit; the gap
I_{1,N} has variance of order 1/N.
"""
from sheetfield.chaos import chaos_gap, limit_process, loglog_slope, simulate_particles
from sheetfield.sheet import GridSpec

grid = GridSpec(1.0, 1.0, 32, 32)
a, y = 0.5, 1.0

# %%
# One system of 20 particles next to the limit driven by particle 1's sheet.
system = simulate_particles(20, [a] * 20, y, grid, seed=4)
limit = limit_process(a, y, grid, system.sheets[0])
print("particle 1 at (1,1):", system.values[0, -1, -1])
print("limit at (1,1):     ", limit.values[-1, -1])
print("limit mean y f((a-1)tx) at (1,1):", limit.deterministic[-1, -1])

# %%
# The convergence table.  This takes a minute; the acceptance run uses a
# 64x64 lattice and 2,000 replications.
rows = chaos_gap([5, 10, 20, 40], a, y, grid, z=(1.0, 1.0), M=800, seed=0)
print(f"{'N':>4} {'distance_sq':>12} {'var_I':>10}")
for r in rows:
    print(f"{r.N:>4} {r.distance_sq:12.3e} {r.var_I:10.3e}")
print("log-log slope of var_I:", round(loglog_slope([r.N for r in rows], [r.var_I for r in rows]), 3))
