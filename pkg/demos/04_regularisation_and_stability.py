# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Removing the regularisation, and stability under data changes
#
# The scheme depends on a parameter `lam` that regularises both the
# viscosity law and the potential. As `lam` decreases the trajectories form
# a Cauchy sequence.

# %%
import numpy as np

from dnch import ModelParams, SolverConfig
from dnch import convex as cx
from dnch.diagnostics import contdep_experiment, lambda_sweep
from dnch.grid import Grid
from dnch.model import CosineProfile, SeparableSource

grid = Grid.uniform(65)
bench = ModelParams(
    cx.double_well(1.0),
    cx.SignPlay(1.0),
    u0=CosineProfile(0.0, 0.5, 1),
    g=SeparableSource(0.5, 2, "sin", 3.0),
    T=1.0,
)
lambdas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
rep = lambda_sweep(bench, SolverConfig(), lambdas, grid, jobs=5)
for a, b, du, dxi in zip(lambdas, lambdas[1:], rep.d_u, rep.d_xi):
    print(f"{a:.0e} -> {b:.0e}   max_t |du|_H = {du:.3e}   |dxi|_L2 = {dxi:.3e}")

# %% [markdown]
# For a linear viscosity law the regularised law is again linear, with slope
# `s / (1 + lam s)`. A run with that slope and no regularisation must agree
# with the regularised run to rounding.

# %%
rep = lambda_sweep(bench.replace(beta=cx.LinearGraph(1.0)), SolverConfig(), lambdas, grid, jobs=5)
print("distance to the exact linear analogue:", rep.oracle_distance)

# %% [markdown]
# ## Continuous dependence
#
# Perturb the source and the initial density by `s` times a fixed pair and
# measure the solution difference against the data difference. The ratio
# settles to a constant as `s` shrinks.

# %%
base = ModelParams(cx.double_well(1.0), cx.CubicGraph(1.0), u0=CosineProfile(0.5, 0.4, 1), T=1.0)
pert = (SeparableSource(1.0, 2, "sin", 3.0), CosineProfile(0.0, 0.1, 2))
for r in contdep_experiment(base, pert, [1.0, 0.5, 0.25, 0.125], SolverConfig(), grid, jobs=4):
    print(f"s = {r.scale:5.3f}  lhs = {r.lhs:.4e}  rhs = {r.rhs:.4e}  ratio = {r.ratio:.4f}")
