"""Manufactured solutions for convergence studies (1D).

The chemical potential is prescribed as ``mu*(x, t) = A theta(t) phi(x)``
with ``phi`` a finite sine series vanishing at both ends, and the density is
integrated from the mass equation,

    u*(x, t) = c0 + c1 cos(k x) + M A Theta(t) phi''(x),   k = pi / L,

with ``Theta`` the primitive of ``theta`` vanishing at 0.  The source ``g`` is
whatever makes ``(u*, mu*)`` solve the un-regularised constitutive relation.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UnsupportedError

__all__ = [
    "ManufacturedSolution",
    "ManufacturedSource",
    "ManufacturedProfile",
    "ConvergenceTable",
    "mms_source",
    "manufactured_params",
    "mms_error",
    "convergence_in_time",
    "convergence_in_space",
    "PROFILES",
]

#: sine series ``sum_j c_j sin(j k x)`` as (coefficient, multiple) pairs.
#: ``compatible`` also has ``phi''' = 0`` at both ends, so ``u*`` satisfies
#: the homogeneous Neumann condition.
PROFILES = {
    "sine": ((1.0, 1),),
    "compatible": ((1.0, 1), (-1.0 / 27.0, 3)),
}


@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form ``(u*, mu*)`` on ``[0, L]``.

    Parameters
    ----------
    profile : {"sine", "compatible"}
    time : {"exp", "steady"}
        ``theta(t) = exp(-rate t)`` or ``theta = 1``.
    rate : float
    amplitude, c0, c1 : float
    """

    profile: str = "compatible"
    time: str = "exp"
    rate: float = 1.0
    amplitude: float = 1.0
    c0: float = 0.0
    c1: float = 0.0

    def __post_init__(self):
        problems = []
        if self.profile not in PROFILES:
            problems.append(f"manufactured profile must be one of {sorted(PROFILES)}, got {self.profile!r}")
        if not self.rate > 0:
            problems.append(f"manufactured decay rate must be > 0, got {self.rate}")
        if self.time not in ("exp", "steady"):
            problems.append(f"manufactured time factor must be 'exp' or 'steady', got {self.time!r}")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)

    @classmethod
    def from_config(cls, spec):
        spec = dict(spec)
        unknown = set(spec) - {"profile", "time", "rate", "amplitude", "c0", "c1"}
        if unknown:
            raise ConfigurationError(f"unknown key(s) for manufactured data: {sorted(unknown)}")
        for k in ("rate", "amplitude", "c0", "c1"):
            if k in spec:
                spec[k] = float(spec[k])
        return cls(**spec)

    def to_config(self):
        return {"kind": "manufactured", "profile": self.profile, "time": self.time,
                "rate": self.rate, "amplitude": self.amplitude, "c0": self.c0, "c1": self.c1}

    def source(self):
        return ManufacturedSource(self)

    def initial(self):
        return ManufacturedProfile(self)

    # -- closed forms ---------------------------------------------------
    def theta(self, t):
        return math.exp(-self.rate * t) if self.time == "exp" else 1.0

    def Theta(self, t):
        return -math.expm1(-self.rate * t) / self.rate if self.time == "exp" else float(t)

    @staticmethod
    def _x(grid):
        if grid.dim != 1:
            raise UnsupportedError("manufactured solutions are implemented in 1D only")
        return grid.coords[0], math.pi / grid.lengths[0]

    def phi(self, x, k, order=0):
        """``order``-th derivative of the spatial profile."""
        out = np.zeros_like(x, dtype=float)
        for c, j in PROFILES[self.profile]:
            w = j * k
            # d^n/dx^n sin(wx) = w^n sin(wx + n pi / 2)
            out += c * w**order * np.sin(w * x + order * math.pi / 2)
        return out

    def mu(self, grid, t):
        x, k = self._x(grid)
        return self.amplitude * self.theta(t) * self.phi(x, k)

    def u(self, grid, t, M=1.0):
        x, k = self._x(grid)
        return self.c0 + self.c1 * np.cos(k * x) + M * self.amplitude * self.Theta(t) * self.phi(x, k, 2)

    def v(self, grid, t, M=1.0):
        x, k = self._x(grid)
        return M * self.amplitude * self.theta(t) * self.phi(x, k, 2)

    def lap_u(self, grid, t, M=1.0):
        x, k = self._x(grid)
        return -self.c1 * k * k * np.cos(k * x) + M * self.amplitude * self.Theta(t) * self.phi(x, k, 4)

    def g(self, grid, t, params):
        """Source making ``(u*, mu*)`` an exact solution for ``params``."""
        beta = params.beta
        if not beta.single_valued:
            raise UnsupportedError(f"manufactured source needs a single-valued beta, got {beta.kind}")
        M = params.M
        v = self.v(grid, t, M)
        u = self.u(grid, t, M)
        return (
            self.mu(grid, t)
            - params.sigma * v
            - beta.value(v)
            + params.alpha * self.lap_u(grid, t, M)
            - params.psi.dpsi(u)
        )


@dataclass(frozen=True)
class ManufacturedSource:
    solution: ManufacturedSolution
    kind = "manufactured"

    def __call__(self, grid, t, params=None):
        if params is None:
            raise ConfigurationError("the manufactured source needs the model parameters")
        return self.solution.g(grid, t, params)

    def to_config(self):
        return self.solution.to_config()


@dataclass(frozen=True)
class ManufacturedProfile:
    solution: ManufacturedSolution
    kind = "manufactured"

    def __call__(self, grid, params=None):
        M = params.M if params is not None else 1.0
        return self.solution.u(grid, 0.0, M)

    def to_config(self):
        return self.solution.to_config()


def mms_source(grid, params, t, solution=None):
    """Manufactured source ``g(., t)`` on ``grid``.

    Uses ``params.g.solution`` when the parameters already carry a
    manufactured source, otherwise ``solution`` or the default profile.
    """
    if solution is None:
        solution = getattr(params.g, "solution", None) or ManufacturedSolution()
    return solution.g(grid, t, params)


def manufactured_params(params, solution=None):
    """Copy of ``params`` with the manufactured source and initial field wired in."""
    solution = solution or getattr(params.g, "solution", None) or ManufacturedSolution()
    return params.replace(g=solution.source(), u0=solution.initial())


def mms_error(params, cfg, grid):
    """``L2(0, T; H)`` distance between the computed and the exact density.

    The run uses ``beta`` and ``psi'`` directly (no regularisation), since
    the manufactured pair solves the un-regularised system.
    """
    from . import grid as gr
    from .stepper import run

    solution = params.g.solution
    cfg = cfg.replace(regularize_beta=False, regularize_potential=False)
    traj = run(params, cfg, grid)
    total = 0.0
    for prev, new in zip(traj.states[:-1], traj.states[1:]):
        total += (new.t - prev.t) * gr.norm_h(grid, new.u - solution.u(grid, new.t, params.M)) ** 2
    return math.sqrt(total)


@dataclass
class ConvergenceTable:
    """Errors against a refinement parameter; ``orders[k]`` uses entries k, k+1."""

    parameter: str
    values: list
    errors: list
    orders: list = field(default_factory=list)

    @property
    def min_order(self):
        return min(self.orders) if self.orders else math.nan

    def rows(self):
        orders = [math.nan] + list(self.orders)
        return [(v, e, o) for v, e, o in zip(self.values, self.errors, orders)]


def _orders(values, errors, ratio):
    return [math.log(errors[k] / errors[k + 1]) / math.log(ratio(values[k], values[k + 1]))
            for k in range(len(errors) - 1)]


def convergence_in_time(params, cfg, grid, taus, jobs=1):
    """Observed temporal order for the given time steps on a fixed grid."""
    params = manufactured_params(params)
    taus = [float(t) for t in taus]
    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        errors = list(pool.map(lambda tau: mms_error(params, cfg.replace(tau=tau), grid), taus))
    return ConvergenceTable("tau", taus, errors, _orders(taus, errors, lambda a, b: a / b))


def convergence_in_space(params, cfg, ns, lengths=1.0, jobs=1):
    """Observed spatial order for 1D grids with ``ns`` nodes at a fixed step."""
    from .grid import Grid

    params = manufactured_params(params)
    ns = [int(n) for n in ns]
    grids = [Grid.uniform(n, lengths) for n in ns]
    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        errors = list(pool.map(lambda g: mms_error(params, cfg, g), grids))
    hs = [g.h[0] for g in grids]
    return ConvergenceTable("n", ns, errors, _orders(hs, errors, lambda a, b: a / b))
