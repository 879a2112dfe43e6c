# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Building blocks: the Green operator and Yosida approximations
#
# Two ingredients carry the whole scheme. The Green operator `G` inverts the
# Dirichlet Laplacian, and it turns the mass equation into an algebraic
# relation between the chemical potential and the time derivative of the
# density. The Yosida approximation replaces a multivalued viscosity law by a
# Lipschitz function.

# %%
import numpy as np

from dnch import convex as cx
from dnch import grid as gr
from dnch.elliptic import DirichletSolver, green_apply
from dnch.grid import Grid

# %% [markdown]
# ## G on an eigenfunction
#
# `-y'' = pi^2 sin(pi x)` with zero boundary values has the solution
# `sin(pi x)`. The three-point stencil is second order, so the error drops
# by four each time the mesh is halved.

# %%
prev = None
for n in (17, 33, 65, 129, 257):
    g = Grid.uniform(n)
    x = g.coords[0]
    y = green_apply(DirichletSolver(g), np.pi**2 * np.sin(np.pi * x))
    err = np.max(np.abs(y - np.sin(np.pi * x)))
    print(f"n = {n:4d}  max error = {err:.3e}" + ("" if prev is None else f"  ratio = {prev / err:.3f}"))
    prev = err

# %% [markdown]
# A quadratic is reproduced exactly: `f = 2` gives `x(1 - x)` at every node.

# %%
g = Grid.uniform(9)
x = g.coords[0]
print(np.max(np.abs(green_apply(DirichletSolver(g), np.full(9, 2.0)) - x * (1 - x))))

# %% [markdown]
# ## Play-type viscosity
#
# `SignPlay(rho)` is `rho` times the sign graph. Its values at zero fill the
# whole interval `[-rho, rho]`, so a small driving force produces no motion
# at all. The Yosida approximation is a ramp of slope `1/lam` that saturates
# at `+-rho`.

# %%
play = cx.SignPlay(1.0)
r = np.linspace(-2, 2, 9)
for lam in (1.0, 0.1, 0.01):
    print(f"lam = {lam:5.2f}", np.round(play.yosida(lam, r), 3))

# %% [markdown]
# The resolvent `(I + lam beta)^-1` is a contraction, and the Yosida values
# never exceed the minimal section in modulus. Both are checked here on a
# random sample for every graph in the catalogue.

# %%
rng = np.random.default_rng(0)
graphs = [cx.ZeroGraph(), cx.LinearGraph(2.0), cx.SignPlay(1.0), cx.ClampGraph(0.5), cx.CubicGraph(1.0)]
r, s = rng.normal(0, 5, 1000), rng.normal(0, 5, 1000)
for graph in graphs:
    worst = 0.0
    for lam in (1.0, 0.1, 0.01):
        jr, js = graph.resolvent(lam, r), graph.resolvent(lam, s)
        worst = max(worst, np.max(np.abs(jr - js) - np.abs(r - s)))
        worst = max(worst, np.max(np.abs(graph.yosida(lam, r)) - np.abs(graph.minimal_section(r))))
    print(f"{graph!r:32s} worst excess {worst:.2e}")

# %% [markdown]
# ## Non-convex potentials
#
# The double well has `psi'' >= -1`, so `psi' + r` is monotone: the
# semiconvexity shift is `K = 1`. The logarithmic potential has
# `K = theta_c - theta`.

# %%
for psi in (cx.double_well(), cx.logarithmic(1.0, 2.0)):
    pts = psi.sample_points()
    print(psi.name, "K =", psi.K, " min psi'' + K =", float(np.min(psi.d2psi(pts) + psi.K)))
