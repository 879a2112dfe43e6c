"""Dirichlet Green operator and the elliptic system for the initial data.

``G f`` is the grid function ``y`` vanishing on the boundary with
``-lap_D y = f`` at interior nodes.  Boundary values of ``f`` are not seen
by ``G`` (the Dirichlet rows are replaced by ``y = 0``).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import grid as gr
from ._linalg import pcg
from .errors import ConfigurationError, DomainViolation, NumericalError, UnsupportedError

__all__ = [
    "DirichletSolver",
    "InitState",
    "green_apply",
    "chemical_potential",
    "solve_initial_system",
    "initial_residual",
]

log = logging.getLogger(__name__)


class DirichletSolver:
    """Cached solver for ``-lap_D y = f``, ``y = 0`` on the boundary.

    Parameters
    ----------
    grid : Grid
    mode : {"auto", "banded", "direct", "cg"}
        ``auto`` picks a banded Cholesky factorisation in 1D and
        incomplete-LU preconditioned CG in 2D.
    tol : float
        Relative residual target of the CG mode.
    """

    def __init__(self, grid, mode="auto", tol=1e-10, maxiter=None):
        self.grid = grid
        if mode == "auto":
            mode = "banded" if grid.dim == 1 else "cg"
        if mode == "banded" and grid.dim != 1:
            raise ValueError("banded mode is only available in 1D")
        if mode not in ("banded", "direct", "cg"):
            raise ValueError(f"unknown Dirichlet solver mode {mode!r}")
        self.mode = mode
        self.tol = float(tol)
        self.maxiter = maxiter
        self.matrix = (-gr.dirichlet_matrix(grid)).tocsc()
        if mode == "banded":
            n = grid.shape[0] - 2
            h2 = grid.h[0] ** 2
            ab = np.empty((2, n))
            ab[0, 0] = 0.0
            ab[0, 1:] = -1.0 / h2
            ab[1, :] = 2.0 / h2
            self._chol = sla.cholesky_banded(ab)
        elif mode == "direct":
            self._lu = spla.splu(self.matrix)
        else:
            self._ilu = spla.spilu(self.matrix, drop_tol=1e-5, fill_factor=20)
        self.last_history = []

    def solve_interior(self, f_int):
        """Solve on the flattened interior unknowns."""
        if self.mode == "banded":
            return sla.cho_solve_banded((self._chol, False), f_int)
        if self.mode == "direct":
            return self._lu.solve(f_int)
        x, hist = pcg(
            self.matrix.dot,
            f_int,
            precond=self._ilu.solve,
            rtol=self.tol,
            maxiter=self.maxiter or 10 * f_int.size,
        )
        self.last_history = hist
        return x

    def apply(self, f):
        f = gr.check_field(self.grid, f, "f")
        y = np.zeros(self.grid.shape)
        y[self.grid.interior] = self.solve_interior(f[self.grid.interior])
        return y


def green_apply(solver, f):
    """``G f``: zero on the boundary, ``-lap_D(G f) = f`` at interior nodes."""
    return solver.apply(f)


def chemical_potential(solver, v, M=1.0):
    """``mu = -(1/M) G v`` so that ``M lap_D mu = v`` at interior nodes."""
    return -solver.apply(v) / M


@dataclass
class InitState:
    """Solution ``(mu0, u0')`` of the elliptic system at ``t = 0``."""

    mu0: np.ndarray
    u0prime: np.ndarray
    z0: np.ndarray
    residual: float
    iterations: int
    method: str
    history: list = field(default_factory=list)


def _resolvent_of_viscosity(graph, sigma):
    """``(sigma I + beta)^{-1}`` and a generalised derivative of it."""
    if not sigma > 0:
        raise UnsupportedError("the initial system needs a positive linear viscosity sigma")
    lam = 1.0 / sigma
    return (
        lambda r: graph.resolvent(lam, r / sigma),
        lambda r: graph.resolvent_derivative(lam, r / sigma) / sigma,
    )


def initial_residual(solver, R, mu, z0, M=1.0):
    """Interior H-norm of ``R(mu - z0) - M lap_D mu``."""
    grid = solver.grid
    res = R(mu - z0) - M * gr.laplacian_dirichlet(grid, mu)
    res[~grid.interior] = 0.0
    return float(np.sqrt(np.sum(grid.weights * res * res)))


def solve_initial_system(
    solver,
    graph,
    u0,
    g0,
    psi,
    *,
    alpha=1.0,
    sigma=1.0,
    M=1.0,
    dpsi=None,
    guess=None,
    tol=1e-8,
    maxiter=100,
):
    """Solve ``u0' = M lap_D mu0``, ``mu0 ∈ sigma u0' + beta(u0') + z0``.

    Here ``z0 = -alpha lap_N u0 + psi'(u0) + g0``.  Eliminating ``u0'``
    leaves ``(sigma + beta)^{-1}(mu0 - z0) - M lap_D mu0 = 0``, which is
    solved by semismooth Newton with halving line search; after five
    stalled line searches the solver switches to the contractive Picard
    iteration ``mu <- G(-(sigma + beta)^{-1}(mu - z0)) / M``.

    ``dpsi`` replaces ``psi'`` (used to pass the regularised nonlinearity).
    The residual is measured at interior nodes in the discrete H norm and
    must end below ``tol * (1 + |z0|_H)``.
    """
    grid = solver.grid
    u0 = gr.check_field(grid, u0, "u0")
    g0 = gr.check_field(grid, g0, "g0")
    if dpsi is None:
        try:
            psi.check_domain(u0, what="u0")
        except DomainViolation as exc:
            raise ConfigurationError(str(exc)) from exc
        dpsi = psi.dpsi
    z0 = -alpha * gr.laplacian_neumann(grid, u0) + dpsi(u0) + g0
    R, dR = _resolvent_of_viscosity(graph, sigma)
    interior = grid.interior
    w = grid.weights[interior]
    lap = M * gr.dirichlet_matrix(grid)
    target = tol * (1.0 + gr.norm_h(grid, z0))
    stop = 1e-4 * target

    mu = np.zeros(grid.shape)
    if guess is not None:
        mu = gr.check_field(grid, guess, "guess").copy()
        mu[~interior] = 0.0

    def residual_vec(m):
        return R(m - z0)[interior] - lap @ m[interior]

    def hnorm(rv):
        return float(np.sqrt(np.sum(w * rv * rv)))

    rv = residual_vec(mu)
    res = hnorm(rv)
    history = [res]
    stalls = 0
    method = "newton"
    it = 0
    while res > stop and it < maxiter and stalls < 5:
        it += 1
        jac = sps.diags(dR(mu - z0)[interior]) - lap
        step = spla.spsolve(jac.tocsc(), -rv)
        t = 1.0
        while t >= 2.0**-30:
            trial = mu.copy()
            trial[interior] += t * step
            trv = residual_vec(trial)
            tres = hnorm(trv)
            if tres < res:
                break
            t *= 0.5
        else:
            stalls += 1
            log.debug("initial-system Newton line search stalled (%d)", stalls)
            if res <= target:
                break
            continue
        mu, rv, res = trial, trv, tres
        history.append(res)

    if res > target:
        method = "picard"
        log.info("initial system: falling back to Picard iteration (residual %.3e)", res)
        for _ in range(10_000):
            it += 1
            mu = solver.apply(-R(mu - z0)) / M
            rv = residual_vec(mu)
            res = hnorm(rv)
            history.append(res)
            if res <= stop:
                break
    if not res <= target:
        raise NumericalError(
            f"initial system did not converge (residual {res:.3e} > {target:.3e})", history
        )
    u0prime = R(mu - z0)
    return InitState(mu, u0prime, z0, res, it, method, history)
