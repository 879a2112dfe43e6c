"""Physical data of a run: potential, viscosity graph, coefficients, source, initial field."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .convex import MonotoneGraph, Potential, graph_from_config, potential_from_config
from .errors import ConfigurationError

__all__ = [
    "ModelParams",
    "ZeroSource",
    "ConstantSource",
    "SeparableSource",
    "FieldSource",
    "PerturbedSource",
    "ConstantProfile",
    "CosineProfile",
    "RandomProfile",
    "FieldProfile",
    "PerturbedProfile",
    "source_from_config",
    "profile_from_config",
]


# -- source terms g(x, t) ---------------------------------------------------


class ZeroSource:
    kind = "zero"

    def __call__(self, grid, t, params=None):
        return np.zeros(grid.shape)

    def to_config(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class ConstantSource:
    value: float = 0.0
    kind = "constant"

    def __call__(self, grid, t, params=None):
        return np.full(grid.shape, float(self.value))

    def to_config(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class SeparableSource:
    """``g(x, t) = amplitude * prod_k cos(mode_k pi x_k / L_k) * T(t)``.

    ``time`` is ``"const"``, ``"sin"`` (``sin(rate t)``) or ``"exp"``
    (``exp(-rate t)``).
    """

    amplitude: float = 1.0
    mode: int = 1
    time: str = "const"
    rate: float = 1.0
    kind = "separable"

    def __post_init__(self):
        if self.time not in ("const", "sin", "exp"):
            raise ConfigurationError(f"separable source time factor must be const/sin/exp, got {self.time!r}")

    def temporal(self, t):
        if self.time == "sin":
            return math.sin(self.rate * t)
        if self.time == "exp":
            return math.exp(-self.rate * t)
        return 1.0

    def __call__(self, grid, t, params=None):
        space = np.ones(grid.shape)
        for x, L in zip(grid.coords, grid.lengths):
            space = space * np.cos(self.mode * np.pi * x / L)
        return self.amplitude * self.temporal(t) * space

    def to_config(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "mode": self.mode,
                "time": self.time, "rate": self.rate}


@dataclass(frozen=True, eq=False)
class FieldSource:
    """A time-independent source given as a nodal array."""

    values: np.ndarray
    kind = "field"

    def __call__(self, grid, t, params=None):
        if np.shape(self.values) != grid.shape:
            raise ConfigurationError("field source does not match the grid")
        return np.array(self.values, dtype=float)

    def to_config(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class PerturbedSource:
    """``base + scale * delta`` (used by the continuous-dependence study)."""

    base: object
    delta: object
    scale: float
    kind = "perturbed"

    def __call__(self, grid, t, params=None):
        return self.base(grid, t, params) + self.scale * self.delta(grid, t, params)

    def to_config(self):
        return {"kind": self.kind, "base": self.base.to_config(),
                "delta": self.delta.to_config(), "scale": self.scale}


# -- initial profiles u0(x) -------------------------------------------------


@dataclass(frozen=True)
class ConstantProfile:
    value: float = 0.0
    kind = "constant"

    def __call__(self, grid, params=None):
        return np.full(grid.shape, float(self.value))

    def to_config(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class CosineProfile:
    """``mean + amplitude * prod_k cos(mode pi x_k / L_k)`` (Neumann compatible)."""

    mean: float = 0.0
    amplitude: float = 0.1
    mode: int = 1
    kind = "cosine"

    def __call__(self, grid, params=None):
        space = np.ones(grid.shape)
        for x, L in zip(grid.coords, grid.lengths):
            space = space * np.cos(self.mode * np.pi * x / L)
        return self.mean + self.amplitude * space

    def to_config(self):
        return {"kind": self.kind, "mean": self.mean, "amplitude": self.amplitude, "mode": self.mode}


@dataclass(frozen=True)
class RandomProfile:
    """Seeded uniform noise of the given amplitude around ``mean``."""

    mean: float = 0.0
    amplitude: float = 0.05
    seed: int = 0
    kind = "random"

    def __call__(self, grid, params=None):
        rng = np.random.default_rng(self.seed)
        return self.mean + self.amplitude * rng.uniform(-1.0, 1.0, grid.shape)

    def to_config(self):
        return {"kind": self.kind, "mean": self.mean, "amplitude": self.amplitude, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class FieldProfile:
    values: np.ndarray
    kind = "field"

    def __call__(self, grid, params=None):
        if np.shape(self.values) != grid.shape:
            raise ConfigurationError("field profile does not match the grid")
        return np.array(self.values, dtype=float)

    def to_config(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class PerturbedProfile:
    base: object
    delta: object
    scale: float
    kind = "perturbed"

    def __call__(self, grid, params=None):
        return self.base(grid, params) + self.scale * self.delta(grid, params)

    def to_config(self):
        return {"kind": self.kind, "base": self.base.to_config(),
                "delta": self.delta.to_config(), "scale": self.scale}


_SOURCES = {
    "zero": (ZeroSource, set()),
    "constant": (ConstantSource, {"value"}),
    "separable": (SeparableSource, {"amplitude", "mode", "time", "rate"}),
}
_PROFILES = {
    "constant": (ConstantProfile, {"value"}),
    "cosine": (CosineProfile, {"mean", "amplitude", "mode"}),
    "random": (RandomProfile, {"mean", "amplitude", "seed"}),
}


def _from_config(spec, table, what):
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "manufactured":
        from .manufactured import ManufacturedSolution

        sol = ManufacturedSolution.from_config(spec)
        return sol.source() if what == "g" else sol.initial()
    if kind not in table:
        raise ConfigurationError(f"unknown {what} kind {kind!r}; expected one of {sorted(table) + ['manufactured']}")
    cls, keys = table[kind]
    unknown = set(spec) - keys
    if unknown:
        raise ConfigurationError(f"unknown key(s) for {what} kind {kind!r}: {sorted(unknown)}")
    for k in ("mode", "seed"):
        if k in spec:
            spec[k] = int(spec[k])
    return cls(**spec)


def source_from_config(spec):
    return _from_config(spec, _SOURCES, "g")


def profile_from_config(spec):
    return _from_config(spec, _PROFILES, "u0")


# -- parameters ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Physical data.

    ``sigma`` is the linear viscosity, ``M`` the mobility and ``alpha`` the
    gradient-energy coefficient; all default to 1.  The semiconvexity shift
    ``K`` is taken from the potential.
    """

    psi: Potential
    beta: MonotoneGraph
    sigma: float = 1.0
    M: float = 1.0
    alpha: float = 1.0
    g: object = field(default_factory=ZeroSource)
    u0: object = field(default_factory=ConstantProfile)
    T: float = 1.0

    def __post_init__(self):
        problems = []
        if not self.sigma >= 0:
            problems.append(f"sigma must be >= 0, got {self.sigma}")
        if not self.M > 0:
            problems.append(f"M must be > 0, got {self.M}")
        if not self.alpha >= 0:
            problems.append(f"alpha must be >= 0, got {self.alpha}")
        if not (self.T >= 0 and math.isfinite(self.T)):
            problems.append(f"T must be finite and >= 0, got {self.T}")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)

    @property
    def K(self):
        return self.psi.K

    def source(self, grid, t):
        return self.g(grid, t, self)

    def initial(self, grid):
        return self.u0(grid, self)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_config(self):
        return {
            "psi": self.psi.to_config(),
            "beta": self.beta.to_config(),
            "sigma": self.sigma,
            "M": self.M,
            "alpha": self.alpha,
            "g": self.g.to_config(),
            "u0": self.u0.to_config(),
            "T": self.T,
        }

    @classmethod
    def from_config(cls, spec):
        spec = dict(spec)
        psi_spec = dict(spec.pop("psi"))
        if "K" in spec:
            psi_spec["K"] = spec.pop("K")
        return cls(
            psi=potential_from_config(psi_spec),
            beta=graph_from_config(spec.pop("beta")),
            g=source_from_config(spec.pop("g", {"kind": "zero"})),
            u0=profile_from_config(spec.pop("u0", {"kind": "constant", "value": 0.0})),
            **{k: float(v) for k, v in spec.items()},
        )
