"""Measured thermodynamic quantities and stability studies.

Time norms follow the backward-Euler interpolants: the step quantities
``v^n, mu^n, xi^n`` are constant on the step they were computed for, so
``L2(0, T; X)`` norms are ``sqrt(sum_{n>=1} tau |f^n|_X^2)``; ``Linf`` norms
are maxima over all snapshots.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import grid as gr
from .errors import ConfigurationError, ContractViolation, DnchError, InvariantViolation

__all__ = [
    "EnergyReport",
    "ContdepReport",
    "SweepReport",
    "free_energy",
    "dissipation_density",
    "dissipation_integral",
    "energy_balance",
    "contdep_experiment",
    "contdep_rhs",
    "lambda_sweep",
    "dissipation_potential",
    "step_report",
    "check_step_invariants",
    "time_l2",
]

log = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12
DENSITY_SLACK = 1e-10


@dataclass(frozen=True)
class EnergyReport:
    """Scalar record of one transition ``u^{n-1} -> u^n`` (or of ``u^0``).

    ``mass_defect`` is ``mass(u^n) - mass(u^{n-1}) - tau M flux(mu^n)`` and
    ``boundary_reaction`` the part of it carried by boundary nodes,
    ``tau * sum_b w_b v_b``.
    """

    t: float
    free_energy: float
    energy_lambda: float
    dissipation_integral: float
    balance_residual: float
    mass: float
    flux: float
    mass_defect: float = 0.0
    boundary_reaction: float = 0.0
    norm_u: float = 0.0
    norm_v: float = 0.0


def free_energy(grid, u, psi, alpha=1.0):
    """``F(u) = int psi(u) + alpha/2 |grad u|^2`` by trapezoid quadrature."""
    u = gr.check_field(grid, u, "u")
    psi.check_domain(u)
    return gr.quadrature_sum(grid, psi.psi(u)) + 0.5 * alpha * gr.grad_sq(grid, u)


def _free_energy_or_nan(grid, u, psi, alpha):
    try:
        return free_energy(grid, u, psi, alpha)
    except DnchError:
        return math.nan


def dissipation_density(grid, mu, v, xi, params):
    """Nodal ``M |grad mu|^2 + (sigma v)^2 + xi v``.

    The second term is the squared product as written in the model; it
    equals ``sigma v^2`` only for ``sigma`` in {0, 1}.
    """
    mu = gr.check_field(grid, mu, "mu")
    v = gr.check_field(grid, v, "v")
    xi = gr.check_field(grid, xi, "xi")
    return params.M * gr.nodal_gradient_sq(grid, mu) + (params.sigma * v) ** 2 + xi * v


def dissipation_integral(grid, mu, v, xi, params, tau):
    """``tau * (M |grad mu|^2 + |sigma v|^2 + <xi, v>)`` with edge gradients."""
    return tau * (
        params.M * gr.grad_sq(grid, mu)
        + gr.inner(grid, params.sigma * v, params.sigma * v)
        + gr.inner(grid, xi, v)
    )


def _boundary_sum(grid, f):
    w = np.where(grid.interior, 0.0, grid.weights)
    return float(np.sum(w * f))


def step_report(stepper, prev, new):
    """:class:`EnergyReport` for the transition ``prev -> new``."""
    p, grid = stepper.params, stepper.grid
    F = _free_energy_or_nan(grid, new.u, p.psi, p.alpha)
    mass = gr.quadrature_sum(grid, new.u)
    flux = gr.boundary_flux(grid, new.mu)
    common = dict(
        t=new.t,
        free_energy=F,
        energy_lambda=stepper.energy(new.u),
        mass=mass,
        flux=flux,
        norm_u=gr.norm_h(grid, new.u),
        norm_v=gr.norm_h(grid, new.v),
    )
    if prev is None:
        return EnergyReport(dissipation_integral=0.0, balance_residual=0.0, **common)
    tau = new.t - prev.t
    diss = dissipation_integral(grid, new.mu, new.v, new.xi, p, tau)
    Fp = _free_energy_or_nan(grid, prev.u, p.psi, p.alpha)
    work = tau * gr.inner(grid, p.source(grid, new.t), new.v)
    return EnergyReport(
        dissipation_integral=diss,
        balance_residual=F - Fp + diss + work,
        mass_defect=mass - gr.quadrature_sum(grid, prev.u) - tau * p.M * flux,
        boundary_reaction=tau * _boundary_sum(grid, new.v),
        **common,
    )


def check_step_invariants(stepper, prev, new):
    """Per-step checks along a run; raises :class:`InvariantViolation`.

    * ``<beta_lam(v), v> >= 0`` and ``<G v, v> >= 0``;
    * nodal dissipation density ``>= -1e-10``;
    * for ``K = 0`` and vanishing source, the discrete energy inequality
      ``E(u^{n+1}) + tau <A v, v> <= E(u^n) + tau |F|_H |v|_H``, where ``F``
      is the final Newton residual.
    """
    p, grid = stepper.params, stepper.grid
    tau = new.t - prev.t
    xv = gr.inner(grid, new.xi, new.v)
    gv = -p.M * gr.inner(grid, new.mu, new.v)
    if xv < -MONOTONE_SLACK or gv < -MONOTONE_SLACK:
        raise InvariantViolation(f"negative dissipation at t = {new.t}: <xi,v> = {xv:.3e}, <Gv,v> = {gv:.3e}")
    delta = dissipation_density(grid, new.mu, new.v, new.xi, p)
    if delta.min() < -DENSITY_SLACK:
        raise InvariantViolation(f"dissipation density {delta.min():.3e} < 0 at t = {new.t}")
    if p.K == 0 and not np.any(p.source(grid, new.t)):
        e0 = stepper.energy(prev.u)
        e1 = stepper.energy(new.u)
        pairing = p.sigma * gr.inner(grid, new.v, new.v) + gv / p.M + xv
        res = new.info.get("residual", 0.0)
        slack = tau * res * gr.norm_h(grid, new.v) + 1e-12 * (1.0 + abs(e0))
        if e1 + tau * pairing > e0 + slack:
            raise InvariantViolation(
                f"energy inequality fails at t = {new.t}: "
                f"{e1 + tau * pairing:.15g} > {e0:.15g} + {slack:.3e}"
            )


def energy_balance(traj, params, cfg=None):
    """Defect of the discrete energy identity over a whole trajectory.

    ``sum_n tau (M |grad mu^n|^2 + sigma |v^n|^2 + <xi^n, v^n>) + F(u^N) -
    F(u^0) + sum_n tau <g(t_n), v^n>``; first order in ``tau`` for smooth
    runs.
    """
    states = traj.states
    grid = traj.grid
    if grid is None or not states:
        raise ContractViolation("trajectory carries no grid or no states")
    if len(traj.reports) != len(states):
        raise ContractViolation("trajectory is incomplete (reports and states differ in length)")
    times = traj.times
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ContractViolation("trajectory times must start at 0 and increase")
    total = 0.0
    for prev, new in zip(states[:-1], states[1:]):
        tau = new.t - prev.t
        total += tau * (
            params.M * gr.grad_sq(grid, new.mu)
            + params.sigma * gr.inner(grid, new.v, new.v)
            + gr.inner(grid, new.xi, new.v)
            + gr.inner(grid, params.source(grid, new.t), new.v)
        )
    F0 = free_energy(grid, states[0].u, params.psi, params.alpha)
    FN = free_energy(grid, states[-1].u, params.psi, params.alpha)
    return FN - F0 + total


def time_l2(grid, traj, values, norm=None):
    """``sqrt(sum_{n>=1} tau_n |values[n]|^2)`` over the steps of ``traj``."""
    norm = norm or (lambda f: gr.norm_h(grid, f))
    times = traj.times
    return math.sqrt(sum((times[n] - times[n - 1]) * norm(values[n]) ** 2 for n in range(1, len(times))))


# -- continuous dependence ----------------------------------------------------


@dataclass
class ContdepReport:
    """One scale of the continuous-dependence study.

    ``ratio`` is ``lhs / rhs`` (nan when ``rhs == 0`` or when the
    trajectories leave ``bounds``; ``hypothesis_failure`` then says why).
    """

    scale: float
    lhs: float
    rhs: float
    ratio: float
    parts: dict = field(default_factory=dict)
    confined: bool = True
    bounds: tuple = (-math.inf, math.inf)
    hypothesis_failure: str = ""


def _as_source(delta):
    from .model import FieldSource

    return FieldSource(np.asarray(delta, dtype=float)) if isinstance(delta, np.ndarray) else delta


def _as_profile(delta):
    from .model import FieldProfile

    return FieldProfile(np.asarray(delta, dtype=float)) if isinstance(delta, np.ndarray) else delta


def _default_bounds(psi, lam):
    if psi.bounded:
        pad = 0.01 * (psi.b - psi.a)
        return psi.a + pad, psi.b - pad
    # on [-1/lam, 1/lam] the truncation is the identity
    return -1.0 / lam, 1.0 / lam


def _confinement(trajs, bounds):
    lo = min(float(np.min(s.u)) for tr in trajs for s in tr.states)
    hi = max(float(np.max(s.u)) for tr in trajs for s in tr.states)
    return bounds[0] <= lo and hi <= bounds[1], (lo, hi)


def _difference_norms(grid, a, b):
    sa, sb = a.states, b.states
    du = [x.u - y.u for x, y in zip(sa, sb)]
    dv = [x.v - y.v for x, y in zip(sa, sb)]
    dmu = [x.mu - y.mu for x, y in zip(sa, sb)]
    dxi = [x.xi - y.xi for x, y in zip(sa, sb)]
    mu_v0 = time_l2(grid, a, dmu, lambda f: math.sqrt(gr.grad_sq(grid, f)))
    u_h1 = math.sqrt(time_l2(grid, a, du) ** 2 + time_l2(grid, a, dv) ** 2)
    u_linf_v = max(gr.norm_v(grid, f) for f in du)
    times = a.times
    xi_v = float(sum((times[n] - times[n - 1]) * gr.inner(grid, dxi[n], dv[n]) for n in range(1, len(times))))
    return {"mu_L2V0": mu_v0, "u_H1H": u_h1, "u_LinfV": u_linf_v, "xi_v": xi_v}


def contdep_rhs(grid, traj, dg_values, du0):
    """``|g1 - g2|_{L2(0,T;H)} + |u0_1 - u0_2|_V`` from the data differences."""
    return time_l2(grid, traj, dg_values) + gr.norm_v(grid, du0)


def contdep_experiment(base, perturbation, scales, cfg, grid, bounds=None, jobs=1):
    """Measure ``lhs / rhs`` of the continuous-dependence estimate.

    Parameters
    ----------
    base : ModelParams
    perturbation : (delta_g, delta_u0)
        Source-like and profile-like objects, or nodal arrays.
    scales : sequence of float
        Each scale ``s`` compares ``base`` against the data
        ``(g + s delta_g, u0 + s delta_u0)``.
    bounds : (float, float), optional
        Interval the trajectories must stay in; defaults to a 1% inset of a
        bounded potential's domain, or to ``[-1/lam, 1/lam]``.
    jobs : int
        Worker threads for the perturbed runs.

    Returns
    -------
    list of ContdepReport
    """
    from .model import PerturbedProfile, PerturbedSource
    from .stepper import run

    dg, du0 = perturbation
    dg = _as_source(dg)
    du0 = _as_profile(du0)
    bounds = tuple(bounds) if bounds is not None else _default_bounds(base.psi, cfg.lam)
    ref = run(base, cfg, grid)

    def one(s):
        if s == 0:
            return ref
        params = base.replace(g=PerturbedSource(base.g, dg, s), u0=PerturbedProfile(base.u0, du0, s))
        return run(params, cfg, grid)

    scales = [float(s) for s in scales]
    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        trajs = list(pool.map(one, scales))

    dg_vals = [dg(grid, st.t, base) for st in ref.states]
    du0_val = du0(grid, base)
    reports = []
    for s, tr in zip(scales, trajs):
        parts = _difference_norms(grid, tr, ref)
        lhs = parts["mu_L2V0"] + parts["u_H1H"] + parts["u_LinfV"] + parts["xi_v"]
        rhs = abs(s) * contdep_rhs(grid, ref, dg_vals, du0_val)
        ok, rng = _confinement([ref, tr], bounds)
        parts["range"] = rng
        if not ok:
            msg = f"trajectory range [{rng[0]:.6g}, {rng[1]:.6g}] leaves [{bounds[0]}, {bounds[1]}]"
            reports.append(ContdepReport(s, lhs, rhs, math.nan, parts, False, bounds, msg))
            continue
        ratio = lhs / rhs if rhs > 0 else math.nan
        reports.append(ContdepReport(s, lhs, rhs, ratio, parts, True, bounds))
    return reports


# -- lambda sweep -------------------------------------------------------------


@dataclass
class SweepReport:
    """Cauchy table of a decreasing sequence of ``lambda`` values.

    ``d_u[j]`` is ``max_n |u_{j+1}^n - u_j^n|_H`` and ``d_xi[j]`` the
    ``L2(Q)`` distance of the selections.  ``oracle_distance`` compares the
    smallest ``lambda`` against the Yosida-free run (linear ``beta`` only).
    """

    lambdas: list
    d_u: list
    d_xi: list
    monotone: bool
    failures: list = field(default_factory=list)
    oracle_distance: float = math.nan

    @property
    def partial(self):
        return bool(self.failures)


def _check_lambdas(lambdas):
    lambdas = [float(x) for x in lambdas]
    problems = []
    if not lambdas:
        problems.append("lambda list is empty")
    if any(not 0 < x < 1 for x in lambdas):
        problems.append("every lambda must satisfy λ ∈ (0,1)")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        problems.append("lambdas must be strictly decreasing")
    if problems:
        raise ConfigurationError("; ".join(problems), problems)
    return lambdas


def trajectory_distance(grid, a, b):
    """``(max_n |u_a - u_b|_H, |xi_a - xi_b|_{L2(Q)})``."""
    du = max(gr.norm_h(grid, x.u - y.u) for x, y in zip(a.states, b.states))
    dxi = time_l2(grid, a, [x.xi - y.xi for x, y in zip(a.states, b.states)])
    return du, dxi


def linear_oracle_params(params, lam):
    """Model data whose un-regularised run equals the ``lam`` run of a linear ``beta``."""
    from .convex import LinearGraph

    s = params.beta.slope
    return params.replace(beta=LinearGraph(s / (1.0 + lam * s)))


def lambda_sweep(params, cfg, lambdas, grid, jobs=1, growth=1.5):
    """Run the scheme for each ``lambda`` and tabulate successive distances.

    A run that fails is recorded in ``failures`` and the table stops there.
    """
    from .convex import LinearGraph
    from .stepper import run

    lambdas = _check_lambdas(lambdas)

    def one(lam):
        try:
            return run(params, cfg.replace(lam=lam), grid)
        except DnchError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        results = list(pool.map(one, lambdas))
    failures = [(lam, f"{type(r).__name__}: {r}") for lam, r in zip(lambdas, results) if isinstance(r, Exception)]
    good = []
    for r in results:
        if isinstance(r, Exception):
            break
        good.append(r)
    d_u, d_xi = [], []
    for a, b in zip(good, good[1:]):
        du, dxi = trajectory_distance(grid, b, a)
        d_u.append(du)
        d_xi.append(dxi)
    monotone = all(y <= growth * x for x, y in zip(d_u, d_u[1:]))
    oracle = math.nan
    if isinstance(params.beta, LinearGraph) and len(good) == len(lambdas):
        lam = lambdas[-1]
        ref = run(linear_oracle_params(params, lam), cfg.replace(lam=lam, regularize_beta=False), grid)
        oracle = trajectory_distance(grid, good[-1], ref)[0]
    if failures:
        log.warning("lambda sweep incomplete: %s", failures)
    return SweepReport(lambdas, d_u, d_xi, monotone, failures, oracle)


def dissipation_potential(v, solver, graph, lam, params):
    """``(1/2M) int |grad G v|^2 + int (sigma/2 v^2 + beta_hat_lam(v))``."""
    grid = solver.grid
    v = gr.check_field(grid, v, "v")
    gv = solver.apply(v)
    return (
        0.5 / params.M * gr.grad_sq(grid, gv)
        + 0.5 * params.sigma * gr.inner(grid, v, v)
        + gr.quadrature_sum(grid, graph.moreau(lam, v))
    )
