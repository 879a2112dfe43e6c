"""Backward-Euler time stepping of the regularised problem.

Each step solves for the discrete time derivative ``v`` on all nodes,

    sigma v + G v / M + beta_lam(v) - alpha lap_N u + gamma_lam(u) + lam u
        - K T_lam(u) + g(t + tau) = 0,          u = u_n + tau v,

by damped semismooth Newton.  The generalised Jacobian is self-adjoint and
positive definite in the trapezoid-weighted inner product (given
``tau <= sigma / (2K)``), so the Newton systems are solved by conjugate
gradients in that inner product.  The local part of the Jacobian (everything
except ``G``) is factorised and used as the preconditioner; ``G`` is only
ever applied through the cached Dirichlet solver.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import grid as gr
from ._linalg import pcg
from .convex import gamma_from_potential, truncate, truncate_derivative
from .elliptic import DirichletSolver, chemical_potential, solve_initial_system
from .errors import (
    ConfigurationError,
    DomainViolation,
    InvariantViolation,
    NumericalError,
    StepFailure,
)

__all__ = ["SolverConfig", "StepState", "Trajectory", "Stepper", "step", "run", "check_compatible"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs.

    Parameters
    ----------
    lam : float
        Regularisation parameter in (0, 1).
    tau : float
        Time step.
    newton_tol : float
        Newton stops once ``|F|_H <= newton_tol * (1 + |g|_H)``.
    newton_max : int
    cg_tol, cg_max
        Relative tolerance and iteration cap of the inner CG solves.
    damping_min : float
        Smallest step fraction tried by the line search.
    regularize_beta, regularize_potential : bool
        Use ``beta`` and ``psi'`` directly instead of their regularised
        forms.  Only for oracle runs (manufactured solutions, the
        Yosida-free reference of a linear ``beta``).
    dirichlet_mode : str
        Passed to :class:`DirichletSolver`.
    green_tol : float
        Tolerance of the Dirichlet solver when it iterates.
    """

    lam: float = 1e-3
    tau: float = 1e-2
    newton_tol: float = 1e-10
    newton_max: int = 50
    cg_tol: float = 1e-10
    cg_max: int = 500
    damping_min: float = 2.0**-20
    regularize_beta: bool = True
    regularize_potential: bool = True
    dirichlet_mode: str = "auto"
    green_tol: float = 1e-12

    def __post_init__(self):
        problems = []
        if not 0 < self.lam < 1:
            problems.append(f"lambda must satisfy λ ∈ (0,1), got {self.lam}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            problems.append(f"tau must be > 0, got {self.tau}")
        for name in ("newton_tol", "cg_tol", "green_tol"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("newton_max", "cg_max"):
            if not (isinstance(getattr(self, name), (int, np.integer)) and getattr(self, name) >= 1):
                problems.append(f"{name} must be a positive integer, got {getattr(self, name)!r}")
        if not 0 < self.damping_min <= 1:
            problems.append(f"damping_min must lie in (0, 1], got {self.damping_min}")
        if self.dirichlet_mode not in ("auto", "banded", "direct", "cg"):
            problems.append(f"dirichlet_mode must be auto/banded/direct/cg, got {self.dirichlet_mode!r}")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_config(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def check_compatible(params, cfg):
    """Cross-checks between model and solver data; raises ConfigurationError."""
    problems = []
    K = params.K
    if K > 0 and cfg.tau > params.sigma / (2.0 * K) * (1 + 1e-12):
        problems.append(f"tau = {cfg.tau} violates tau <= sigma/(2K) = {params.sigma / (2 * K)}")
    if not cfg.regularize_beta and not params.beta.single_valued:
        problems.append(f"beta kind {params.beta.kind!r} is multivalued and needs regularize_beta")
    if problems:
        raise ConfigurationError("; ".join(problems), problems)


@dataclass(frozen=True, eq=False)
class StepState:
    """Snapshot at time ``t``; ``info`` holds solver statistics."""

    t: float
    u: np.ndarray
    v: np.ndarray
    xi: np.ndarray
    mu: np.ndarray
    info: dict = field(default_factory=dict)

    def same_as(self, other):
        """Bitwise equality of time and fields."""
        return self.t == other.t and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("u", "v", "xi", "mu")
        )


@dataclass
class Trajectory:
    states: list
    reports: list
    grid: object = None
    tau: float = None

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def final(self):
        return self.states[-1]

    def same_as(self, other):
        return len(self.states) == len(other.states) and all(
            a.same_as(b) for a, b in zip(self.states, other.states)
        )


class Stepper:
    """Discretisation of one ``(params, cfg, grid)`` triple with cached operators."""

    def __init__(self, params, cfg, grid, solver=None):
        check_compatible(params, cfg)
        self.params = params
        self.cfg = cfg
        self.grid = grid
        self.solver = solver or DirichletSolver(grid, mode=cfg.dirichlet_mode, tol=cfg.green_tol)
        self.gamma = gamma_from_potential(params.psi)
        self.lap_n = gr.neumann_matrix(grid).tocsc()
        lam = cfg.lam
        beta = params.beta
        if cfg.regularize_beta:
            self.beta_fn = lambda v: beta.yosida(lam, v)
            self.beta_der = lambda v: beta.yosida_derivative(lam, v)
        else:
            self.beta_fn = beta.value
            self.beta_der = beta.derivative
        K = params.K
        if cfg.regularize_potential:
            gam = self.gamma
            self.pot_fn = lambda u: gam.yosida(lam, u) + lam * u - K * truncate(lam, u)
            self.pot_der = lambda u: gam.yosida_derivative(lam, u) + lam - K * truncate_derivative(lam, u)
        else:
            self.pot_fn = params.psi.dpsi
            self.pot_der = params.psi.d2psi

    # -- energies ---------------------------------------------------------
    def energy(self, u):
        """Discrete energy whose gradient is the ``u``-part of the step operator."""
        grid = self.grid
        a = 0.5 * self.params.alpha * gr.grad_sq(grid, u)
        if self.cfg.regularize_potential:
            lam = self.cfg.lam
            return a + gr.quadrature_sum(grid, self.gamma.moreau(lam, u)) + 0.5 * lam * gr.inner(grid, u, u)
        return a + gr.quadrature_sum(grid, self.params.psi.psi(u))

    # -- residual and Newton ----------------------------------------------
    def residual(self, v, un, gnext):
        p = self.params
        u = un + self.cfg.tau * v
        return (
            p.sigma * v
            + self.solver.apply(v) / p.M
            + self.beta_fn(v)
            - p.alpha * gr.laplacian_neumann(self.grid, u)
            + self.pot_fn(u)
            + gnext
        )

    def _hnorm(self, r):
        return float(np.sqrt(np.sum(self.grid.weights * r * r)))

    def _in_domain(self, u):
        psi = self.params.psi
        if not psi.bounded:
            return True
        try:
            psi.check_domain(u)
        except DomainViolation:
            return False
        return True

    def _newton_direction(self, v, u, rhs):
        p, cfg, grid = self.params, self.cfg, self.grid
        tau = cfg.tau
        db = self.beta_der(v)
        dp = self.pot_der(u)
        local = p.sigma + db + tau * dp
        shape = grid.shape
        w = grid.weights.ravel()

        def apply_j(x):
            xs = x.reshape(shape)
            out = local * xs + self.solver.apply(xs) / p.M - tau * p.alpha * gr.laplacian_neumann(grid, xs)
            return out.ravel()

        pre = sps.diags(local.ravel()) - (tau * p.alpha) * self.lap_n
        lu = spla.splu(pre.tocsc())
        x, hist = pcg(
            apply_j,
            rhs.ravel(),
            dot=lambda a, b: float(np.dot(w * a, b)),
            precond=lu.solve,
            rtol=cfg.cg_tol,
            maxiter=cfg.cg_max,
        )
        return x.reshape(shape), len(hist) - 1

    def step(self, state, index=None):
        """Advance ``state`` by one time step."""
        p, cfg, grid = self.params, self.cfg, self.grid
        tau = cfg.tau
        un = gr.check_field(grid, state.u, "u")
        # inside a run the time is recomputed from the index to avoid drift
        t1 = index * tau if index is not None else state.t + tau
        if p.T > 0 and t1 > p.T + 0.5 * tau:
            raise ConfigurationError(f"step to t = {t1} overshoots T = {p.T}")
        gnext = p.source(grid, t1)
        target = cfg.newton_tol * (1.0 + self._hnorm(gnext))

        v = np.array(state.v, dtype=float)
        if not self._in_domain(un + tau * v):
            v = np.zeros(grid.shape)
        r = self.residual(v, un, gnext)
        res = self._hnorm(r)
        history = [res]
        dampings = []
        cg_total = 0
        it = 0
        while res > target:
            if it >= cfg.newton_max:
                raise StepFailure(
                    f"Newton did not converge in {cfg.newton_max} iterations "
                    f"(residual {res:.3e} > {target:.3e})",
                    history,
                    {"v": v, "u": un + tau * v, "residual": res},
                    index,
                )
            it += 1
            try:
                dv, ncg = self._newton_direction(v, un + tau * v, -r)
            except NumericalError as exc:
                raise StepFailure(
                    f"inner linear solve failed: {exc}", history, {"v": v, "residual": res}, index
                ) from exc
            cg_total += ncg
            t = 1.0
            left_domain = False
            while True:
                trial = v + t * dv
                if self._in_domain(un + tau * trial):
                    tr = self.residual(trial, un, gnext)
                    tres = self._hnorm(tr)
                    if tres < res or tres <= target:
                        break
                else:
                    left_domain = True
                t *= 0.5
                if t < cfg.damping_min:
                    if left_domain:
                        raise DomainViolation(
                            f"line search cannot keep u inside the domain of {p.psi.name}"
                        )
                    raise StepFailure(
                        f"line search failed (residual {res:.3e})",
                        history,
                        {"v": v, "u": un + tau * v, "residual": res},
                        index,
                    )
            v, r, res = trial, tr, tres
            history.append(res)
            dampings.append(t)

        u = un + tau * v
        if p.psi.bounded:
            p.psi.check_domain(u)
        xi = self.beta_fn(v)
        mu = chemical_potential(self.solver, v, p.M)
        recovered = mu - p.sigma * v - xi + p.alpha * gr.laplacian_neumann(grid, u) - self.pot_fn(u) - gnext
        rec = self._hnorm(recovered)
        if rec > 10.0 * target:
            raise InvariantViolation(
                f"recovered constitutive residual {rec:.3e} exceeds {10 * target:.3e} at t = {t1}"
            )
        info = {
            "newton_iterations": it,
            "residual": res,
            "residual_history": history,
            "dampings": dampings,
            "cg_iterations": cg_total,
            "recovered_residual": rec,
        }
        if cfg.regularize_potential:
            # distance between the regularised and the true nonlinearity
            if self._in_domain(u):
                info["psi_defect"] = self._hnorm(self.pot_fn(u) - p.psi.dpsi(u))
            bind = int(np.count_nonzero(np.abs(u) > 1.0 / cfg.lam))
            info["truncation_nodes"] = bind
            if bind:
                log.info("truncation at level 1/lambda binds on %d nodes at t = %g", bind, t1)
        return StepState(t1, u, v, xi, mu, info)

    def initial_state(self):
        p, cfg, grid = self.params, self.cfg, self.grid
        u0 = gr.check_field(grid, p.initial(grid), "u0")
        if p.psi.bounded:
            try:
                p.psi.check_domain(u0, what="u0")
            except DomainViolation as exc:
                raise ConfigurationError(str(exc)) from exc
        graph = p.beta.regularized(cfg.lam) if cfg.regularize_beta else p.beta
        init = solve_initial_system(
            self.solver,
            graph,
            u0,
            p.source(grid, 0.0),
            p.psi,
            alpha=p.alpha,
            sigma=p.sigma,
            M=p.M,
            dpsi=self.pot_fn,
        )
        v0 = init.u0prime
        info = {"init_residual": init.residual, "init_iterations": init.iterations, "init_method": init.method}
        return StepState(0.0, u0, v0, self.beta_fn(v0), init.mu0, info)

    def run(self):
        from .diagnostics import step_report, check_step_invariants

        p, cfg = self.params, self.cfg
        nsteps = int(math.ceil(p.T / cfg.tau - 1e-9)) if p.T > 0 else 0
        state = self.initial_state()
        states = [state]
        reports = [step_report(self, None, state)]
        for n in range(nsteps):
            try:
                new = self.step(state, index=n + 1)
            except StepFailure as exc:
                exc.step_index = n + 1
                raise
            except (DomainViolation, InvariantViolation) as exc:
                raise type(exc)(f"step {n + 1}: {exc}") from exc
            check_step_invariants(self, state, new)
            reports.append(step_report(self, state, new))
            states.append(new)
            state = new
        return Trajectory(states, reports, self.grid, cfg.tau)


def step(state, params, cfg, grid, stepper=None):
    """One backward-Euler step; see :class:`Stepper`."""
    stepper = stepper or Stepper(params, cfg, grid)
    return stepper.step(state)


def run(params, cfg, grid):
    """Initial state from the elliptic system, then ``ceil(T/tau)`` steps."""
    return Stepper(params, cfg, grid).run()
