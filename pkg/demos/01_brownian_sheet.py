"""
Sampling the Brownian sheet
===========================

A Brownian sheet on [0,1]^2 is built from independent cell masses.  Each path
has its own Philox stream, so a path is a function of (seed, path_id) only.
"""
import numpy as np

from sheetfield import GridSpec, rect_increment, sample_sheet
from sheetfield.sheet import cumulate, sample_increments

grid = GridSpec(t_max=1.0, x_max=1.0, nt=16, nx=16)
path = sample_sheet(grid, seed=7, path_id=0)
print("B(1,1) on path 0:", path.values[-1, -1])
print("mass of [0.25,0.75]x[0.5,1]:", rect_increment(path, 0.25, 0.75, 0.5, 1.0))

# %%
# Covariance of the sheet is min(t,s) min(x,a).  Check it on 50,000 paths.
vals = cumulate(sample_increments(grid, seed=7, path_ids=np.arange(50_000)))
b11, b51 = vals[:, 16, 16], vals[:, 8, 16]
print(f"Var B(1,1) = {b11.var():.4f}   (exact 1)")
print(f"Cov(B(1,1), B(0.5,1)) = {np.cov(b11, b51)[0, 1]:.4f}   (exact 0.5)")

# %%
# Refinement coupling: summing 2x2 blocks of a fine path gives the coarse path
# of the same realization, node for node.
fine = sample_sheet(grid.refined(2), seed=7, path_id=3)
coarse = fine.coarsened(2)
print("max |coarse - fine[::2, ::2]| =", np.abs(coarse.values - fine.values[::2, ::2]).max())
