"""Doubly nonlinear viscous Cahn--Hilliard solver with Yosida regularisation.

Modules
-------
grid          uniform 1D/2D grids, Laplacians, quadrature, norms
convex        monotone graphs, resolvents, Yosida approximations, potentials
elliptic      Dirichlet Green operator and the initial elliptic system
model         physical data: coefficients, sources, initial fields
stepper       backward-Euler stepping with a semismooth Newton solve
manufactured  manufactured solutions and convergence studies
diagnostics   energies, dissipation, stability and lambda studies
io            CSV tables, field dumps, gnuplot scripts
cli           command line front end
"""
__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    ContractViolation,
    DnchError,
    DomainViolation,
    GridMismatchError,
    InvariantViolation,
    NumericalError,
    StepFailure,
    UnsupportedError,
)
from .grid import Grid
from .convex import (
    ClampGraph,
    CubicGraph,
    CustomGraph,
    LinearGraph,
    PowerGraph,
    SignPlay,
    ZeroGraph,
    double_well,
    gamma_from_potential,
    logarithmic,
    quadratic,
    zero_potential,
)
from .elliptic import DirichletSolver, solve_initial_system
from .model import ModelParams
from .stepper import SolverConfig, StepState, Stepper, Trajectory, run, step
from .manufactured import ManufacturedSolution, mms_source
