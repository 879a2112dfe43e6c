"""Maximal monotone graphs on the real line and the free-energy potentials.

All graph methods are vectorised over numpy arrays.  A graph ``beta`` with
``0 in beta(0)`` and convex potential ``beta_hat`` (``beta_hat(0) = 0``)
provides

* ``bounds(r)``            -> the interval ``[beta^-(r), beta^+(r)]``
* ``minimal_section(r)``   -> the element of ``beta(r)`` of least modulus
* ``resolvent(lam, r)``    -> ``x`` with ``x + lam*beta(x) ∋ r``
* ``yosida(lam, r)``       -> ``(r - resolvent(lam, r)) / lam``
* ``moreau(lam, r)``       -> ``beta_hat(J r) + lam/2 * yosida(lam, r)**2``

Potentials ``psi`` on ``(a, b)`` come with a user-supplied semiconvexity
constant ``K`` (checked on samples) and induce the increasing function
``gamma = psi' + K*id`` through :func:`gamma_from_potential`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, NumericalError, UnsupportedError

__all__ = [
    "MonotoneGraph",
    "ZeroGraph",
    "LinearGraph",
    "SignPlay",
    "ClampGraph",
    "PowerGraph",
    "CubicGraph",
    "CustomGraph",
    "Potential",
    "GammaGraph",
    "GrowthReport",
    "resolvent",
    "yosida",
    "moreau",
    "truncate",
    "truncate_derivative",
    "gamma_from_potential",
    "yosida_derivative_growth_check",
    "graph_from_config",
    "potential_from_config",
    "double_well",
    "quadratic",
    "logarithmic",
    "zero_potential",
]

RESOLVENT_RTOL = 1e-12
_EMPTY = (np.nan, np.nan)


def _solve_increasing(fun, dfun, target, lo, hi, tol, maxiter=200):
    """Safeguarded Newton for ``fun(x) = target`` with ``fun`` nondecreasing.

    ``lo``/``hi`` must bracket the root elementwise.  Newton steps that leave
    the current bracket are replaced by bisection.
    """
    target = np.asarray(target, dtype=float)
    lo = np.array(np.broadcast_to(lo, target.shape), dtype=float)
    hi = np.array(np.broadcast_to(hi, target.shape), dtype=float)
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        f = fun(x) - target
        done = (np.abs(f) <= tol) | (hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(x)))
        if np.all(done):
            return x
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f / dfun(x)
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        x = np.where(done, x, xn)
    f = fun(x) - target
    if np.all(np.abs(f) <= tol):
        return x
    raise NumericalError(
        "resolvent root-finder did not converge",
        history=[float(np.max(np.abs(f)))],
        state={"lo": lo, "hi": hi, "x": x},
    )


class MonotoneGraph:
    """Base class for maximal monotone graphs with ``0 ∈ beta(0)``.

    Subclasses implement ``bounds``, ``potential``, ``minimal_section`` and
    either a closed-form ``resolvent`` or ``value``/``derivative`` (for
    single-valued continuous graphs, where the generic root-finder is used).
    """

    kind = "abstract"
    single_valued = False
    #: ``M`` with ``|s| <= M (1 + |r|)`` for all ``s in beta(r)``, if any
    growth_bound = None

    def params(self):
        return {}

    def to_config(self):
        return {"kind": self.kind, **self.params()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((type(self), tuple(sorted(self.params().items()))))

    # -- data of the graph itself ---------------------------------------
    def bounds(self, r):
        raise NotImplementedError

    def potential(self, r):
        raise NotImplementedError

    def minimal_section(self, r):
        raise NotImplementedError

    def value(self, r):
        raise UnsupportedError(f"{self.kind} graph is multivalued")

    def derivative(self, r):
        raise UnsupportedError(f"{self.kind} graph is not differentiable")

    # -- Yosida machinery -----------------------------------------------
    def resolvent(self, lam, r):
        r = np.asarray(r, dtype=float)
        return _solve_increasing(
            lambda x: x + lam * self.value(x),
            lambda x: 1.0 + lam * self.derivative(x),
            r,
            np.minimum(r, 0.0),
            np.maximum(r, 0.0),
            RESOLVENT_RTOL * 0.5 * (1.0 + np.abs(r)),
        )

    def resolvent_derivative(self, lam, r):
        """A generalised derivative of ``r -> resolvent(lam, r)``, in [0, 1]."""
        x = self.resolvent(lam, r)
        d = self.derivative(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1.0 / (1.0 + lam * d)
        return np.where(np.isfinite(d), out, 0.0)

    def yosida(self, lam, r):
        if self.single_valued:
            return self.value(self.resolvent(lam, r))
        return (np.asarray(r, dtype=float) - self.resolvent(lam, r)) / lam

    def yosida_derivative(self, lam, r):
        return (1.0 - self.resolvent_derivative(lam, r)) / lam

    def moreau(self, lam, r):
        return self.potential(self.resolvent(lam, r)) + 0.5 * lam * self.yosida(lam, r) ** 2

    def distance_to_image(self, lam, r, x):
        """``dist(r - x, lam * beta(x))`` -- the resolvent defect."""
        lo, hi = self.bounds(x)
        s = np.asarray(r, dtype=float) - x
        with np.errstate(invalid="ignore"):
            d = np.maximum(np.maximum(lam * lo - s, s - lam * hi), 0.0)
        return np.where(np.isnan(lo), np.inf, d)

    def regularized(self, lam):
        """The Yosida approximation as a single-valued :class:`CustomGraph`."""
        return CustomGraph(
            lambda r: self.yosida(lam, r),
            lambda r: self.moreau(lam, r),
            lambda r: self.yosida_derivative(lam, r),
            name=f"{self.kind}_yosida",
            growth_bound=self.growth_bound,
        )


class ZeroGraph(MonotoneGraph):
    kind = "zero"
    single_valued = True
    growth_bound = 0.0

    def bounds(self, r):
        z = np.zeros_like(np.asarray(r, dtype=float))
        return z, z

    def potential(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    minimal_section = value = derivative = potential

    def resolvent(self, lam, r):
        return np.array(r, dtype=float)

    def resolvent_derivative(self, lam, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def yosida(self, lam, r):
        return np.zeros_like(np.asarray(r, dtype=float))


class LinearGraph(MonotoneGraph):
    """``beta(r) = slope * r``."""

    kind = "linear"
    single_valued = True

    def __init__(self, slope=1.0):
        if not slope >= 0:
            raise ConfigurationError(f"linear slope must be >= 0, got {slope}")
        self.slope = float(slope)
        self.growth_bound = self.slope

    def params(self):
        return {"slope": self.slope}

    def value(self, r):
        return self.slope * np.asarray(r, dtype=float)

    def bounds(self, r):
        v = self.value(r)
        return v, v

    minimal_section = value

    def derivative(self, r):
        return np.full_like(np.asarray(r, dtype=float), self.slope)

    def potential(self, r):
        return 0.5 * self.slope * np.asarray(r, dtype=float) ** 2

    def resolvent(self, lam, r):
        return np.asarray(r, dtype=float) / (1.0 + lam * self.slope)

    def resolvent_derivative(self, lam, r):
        return np.full_like(np.asarray(r, dtype=float), 1.0 / (1.0 + lam * self.slope))

    def yosida(self, lam, r):
        return self.slope * np.asarray(r, dtype=float) / (1.0 + lam * self.slope)


class SignPlay(MonotoneGraph):
    """``beta = rho * Sign``: the play-type (stick/slip) viscosity law.

    ``beta(0) = [-rho, rho]``; the resolvent is soft thresholding and the
    Yosida approximation is ``clip(r / lam, -rho, rho)``.
    """

    kind = "sign_play"

    def __init__(self, rho=1.0):
        if not rho >= 0:
            raise ConfigurationError(f"sign_play strength must be >= 0, got {rho}")
        self.rho = float(rho)
        self.growth_bound = self.rho

    def params(self):
        return {"rho": self.rho}

    def bounds(self, r):
        r = np.asarray(r, dtype=float)
        s = np.sign(r)
        lo = np.where(r == 0, -self.rho, self.rho * s)
        hi = np.where(r == 0, self.rho, self.rho * s)
        return lo, hi

    def potential(self, r):
        return self.rho * np.abs(np.asarray(r, dtype=float))

    def minimal_section(self, r):
        return self.rho * np.sign(np.asarray(r, dtype=float))

    def resolvent(self, lam, r):
        r = np.asarray(r, dtype=float)
        return np.sign(r) * np.maximum(np.abs(r) - lam * self.rho, 0.0)

    def resolvent_derivative(self, lam, r):
        return (np.abs(np.asarray(r, dtype=float)) > lam * self.rho).astype(float)

    def yosida(self, lam, r):
        return np.clip(np.asarray(r, dtype=float) / lam, -self.rho, self.rho)

    def moreau(self, lam, r):
        a = np.abs(np.asarray(r, dtype=float))
        return np.where(a <= lam * self.rho, a * a / (2 * lam), self.rho * a - 0.5 * lam * self.rho**2)


class ClampGraph(MonotoneGraph):
    """Subdifferential of the indicator of ``[-level, level]``.

    Its resolvent is the clamp onto the interval for every ``lam``; outside
    the interval the graph is empty and ``beta_hat = +inf``.
    """

    kind = "clamp"

    def __init__(self, level=1.0):
        if not level > 0:
            raise ConfigurationError(f"clamp level must be > 0, got {level}")
        self.level = float(level)

    def params(self):
        return {"level": self.level}

    def bounds(self, r):
        r = np.asarray(r, dtype=float)
        m = self.level
        lo = np.where(np.abs(r) < m, 0.0, np.where(r == m, 0.0, np.where(r == -m, -np.inf, np.nan)))
        hi = np.where(np.abs(r) < m, 0.0, np.where(r == m, np.inf, np.where(r == -m, 0.0, np.nan)))
        return lo, hi

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(np.abs(r) <= self.level, 0.0, np.inf)

    def minimal_section(self, r):
        return self.potential(r)

    def resolvent(self, lam, r):
        return np.clip(np.asarray(r, dtype=float), -self.level, self.level)

    def resolvent_derivative(self, lam, r):
        return (np.abs(np.asarray(r, dtype=float)) <= self.level).astype(float)

    def moreau(self, lam, r):
        return 0.5 * lam * self.yosida(lam, r) ** 2


class PowerGraph(MonotoneGraph):
    """``beta(r) = c |r|^(p-1) sign(r)``, potential ``c |r|^p / p``."""

    kind = "power"
    single_valued = True

    def __init__(self, exponent=2.0, coefficient=1.0):
        if not exponent > 1:
            raise ConfigurationError(f"power exponent must be > 1, got {exponent}")
        if not coefficient > 0:
            raise ConfigurationError(f"power coefficient must be > 0, got {coefficient}")
        self.p = float(exponent)
        self.c = float(coefficient)
        self.growth_bound = self.c if self.p <= 2 else None

    def params(self):
        return {"exponent": self.p, "coefficient": self.c}

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * np.sign(r) * np.abs(r) ** (self.p - 1)

    def bounds(self, r):
        v = self.value(r)
        return v, v

    minimal_section = value

    def derivative(self, r):
        a = np.abs(np.asarray(r, dtype=float))
        with np.errstate(divide="ignore"):
            return self.c * (self.p - 1) * a ** (self.p - 2)

    def potential(self, r):
        return self.c * np.abs(np.asarray(r, dtype=float)) ** self.p / self.p

    def resolvent(self, lam, r):
        r = np.asarray(r, dtype=float)
        # |x| <= min(|r|, (|r| / (lam c))^(1/(p-1)))
        a = np.abs(r)
        cap = np.minimum(a, (a / (lam * self.c)) ** (1.0 / (self.p - 1)))
        x = _solve_increasing(
            lambda x: x + lam * self.value(x),
            lambda x: 1.0 + lam * self.derivative(x),
            a,
            np.zeros_like(a),
            cap,
            RESOLVENT_RTOL * 0.5 * (1.0 + a),
        )
        return np.sign(r) * x


class CubicGraph(PowerGraph):
    """``beta(r) = c r^3``."""

    kind = "cubic"

    def __init__(self, coefficient=1.0):
        super().__init__(4.0, coefficient)

    def params(self):
        return {"coefficient": self.c}

    def value(self, r):
        return self.c * np.asarray(r, dtype=float) ** 3

    def derivative(self, r):
        return 3.0 * self.c * np.asarray(r, dtype=float) ** 2


class CustomGraph(MonotoneGraph):
    """A continuous nondecreasing function ``f`` with ``f(0) = 0`` as a graph.

    Parameters
    ----------
    func, potential : callable
        Vectorised ``f`` and a primitive vanishing at 0.
    derivative : callable, optional
        ``f'``; a central difference is used when omitted.
    """

    kind = "custom"
    single_valued = True

    def __init__(self, func, potential, derivative=None, name="custom", growth_bound=None):
        self._f = func
        self._F = potential
        self._df = derivative
        self.name = name
        self.growth_bound = growth_bound
        if abs(float(func(np.array(0.0)))) > 1e-14:
            raise ConfigurationError("custom graph must satisfy f(0) = 0")

    def params(self):
        return {"name": self.name}

    def __eq__(self, other):
        return self is other

    __hash__ = object.__hash__

    def value(self, r):
        return np.asarray(self._f(np.asarray(r, dtype=float)), dtype=float)

    def bounds(self, r):
        v = self.value(r)
        return v, v

    minimal_section = value

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self._df is not None:
            return np.asarray(self._df(r), dtype=float)
        h = 1e-6 * (1.0 + np.abs(r))
        return (self.value(r + h) - self.value(r - h)) / (2 * h)

    def potential(self, r):
        return np.asarray(self._F(np.asarray(r, dtype=float)), dtype=float)


def resolvent(graph, lam, r):
    """``x`` solving ``x + lam * beta(x) ∋ r``."""
    _check_lambda(lam)
    return graph.resolvent(lam, r)


def yosida(graph, lam, r):
    """Yosida approximation ``beta_lam(r) = (r - J_lam r) / lam``."""
    _check_lambda(lam)
    return graph.yosida(lam, r)


def moreau(graph, lam, r):
    """Moreau--Yosida envelope of the potential; its derivative is ``yosida``."""
    _check_lambda(lam)
    return graph.moreau(lam, r)


def truncate(lam, r):
    """Truncation at level ``1/lam``."""
    _check_lambda(lam)
    return np.clip(np.asarray(r, dtype=float), -1.0 / lam, 1.0 / lam)


def truncate_derivative(lam, r):
    return (np.abs(np.asarray(r, dtype=float)) <= 1.0 / lam).astype(float)


def _check_lambda(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise ConfigurationError(f"lambda must be positive, got {lam}")


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

DOMAIN_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class Potential:
    """Free-energy density ``psi`` on ``(a, b)``.

    ``certificate`` is ``("poly", M)`` when ``|psi''(r)| <= M (1 + |r|^5)``
    on the whole line, or ``("singular",)`` when ``psi'`` blows up at finite
    endpoints.  Construction samples ``psi >= 0`` and ``psi'' >= -K``.
    """

    name: str
    value: object
    d1: object
    d2: object
    K: float
    a: float = -math.inf
    b: float = math.inf
    certificate: tuple = ("poly", 1.0)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.a < self.b:
            raise ConfigurationError(f"empty potential domain ({self.a}, {self.b})")
        if not self.K >= 0:
            raise ConfigurationError(f"semiconvexity constant K must be >= 0, got {self.K}")
        if self.certificate[0] not in ("poly", "singular"):
            raise ConfigurationError(f"unknown growth certificate {self.certificate!r}")
        if self.certificate[0] == "singular" and not self.bounded:
            raise ConfigurationError("a singular certificate needs finite endpoints")
        self.validate()

    @property
    def bounded(self):
        return math.isfinite(self.a) and math.isfinite(self.b)

    @property
    def eps_dom(self):
        return 1e-12 * (self.b - self.a) if self.bounded else 0.0

    def sample_points(self, n=10_000):
        if self.bounded:
            d = 1e-9 * (self.b - self.a)
            return np.linspace(self.a + d, self.b - d, n)
        lo = self.a if math.isfinite(self.a) else -10.0
        hi = self.b if math.isfinite(self.b) else 10.0
        return np.linspace(lo, hi, n)

    def validate(self):
        r = self.sample_points()
        psi = self.psi(r)
        if np.min(psi) < -1e-12:
            raise ConfigurationError(f"{self.name}: psi must be >= 0 (min {np.min(psi):.3e})")
        d2 = self.d2psi(r)
        if np.min(d2) < -self.K - 1e-9 * (1 + np.max(np.abs(d2))):
            raise ConfigurationError(
                f"{self.name}: psi'' >= -K fails (min psi'' = {np.min(d2):.6g}, K = {self.K})"
            )
        if self.certificate[0] == "poly":
            M = self.certificate[1]
            if np.any(np.abs(d2) > M * (1 + np.abs(r) ** 5) * (1 + 1e-12)):
                raise ConfigurationError(f"{self.name}: |psi''| <= M(1+|r|^5) fails for M = {M}")
        else:
            dist = (self.b - self.a) * 10.0 ** -np.arange(2, 13)
            left = self.dpsi(self.a + dist)
            right = self.dpsi(self.b - dist)
            if not (np.all(np.diff(left) < 0) and np.all(np.diff(right) > 0)
                    and left[-1] < left[0] - 5 and right[-1] > right[0] + 5):
                raise ConfigurationError(f"{self.name}: psi' does not diverge at the endpoints")

    def _clamp(self, r):
        r = np.asarray(r, dtype=float)
        if not self.bounded:
            return r
        return np.clip(r, self.a + self.eps_dom, self.b - self.eps_dom)

    def psi(self, r):
        return np.asarray(self.value(self._clamp(r)), dtype=float)

    def dpsi(self, r):
        return np.asarray(self.d1(self._clamp(r)), dtype=float)

    def d2psi(self, r):
        return np.asarray(self.d2(self._clamp(r)), dtype=float)

    def check_domain(self, u, margin=DOMAIN_MARGIN, what="state"):
        """Raise :class:`DomainViolation` if ``u`` leaves ``[a+margin, b-margin]``."""
        from .errors import DomainViolation

        u = np.asarray(u, dtype=float)
        lo = self.a + margin if math.isfinite(self.a) else -math.inf
        hi = self.b - margin if math.isfinite(self.b) else math.inf
        if u.size and (np.min(u) < lo or np.max(u) > hi):
            raise DomainViolation(
                f"{what} leaves [{lo}, {hi}] of potential {self.name}: "
                f"range [{np.min(u):.6g}, {np.max(u):.6g}]"
            )

    def to_config(self):
        return {"kind": self.name, **self.params, "K": self.K}


def double_well(K=1.0):
    """``psi(r) = (r^2 - 1)^2 / 4``; ``psi'' = 3r^2 - 1 >= -1``."""
    return Potential(
        "double_well",
        lambda r: 0.25 * (r * r - 1.0) ** 2,
        lambda r: r**3 - r,
        lambda r: 3.0 * r * r - 1.0,
        K=float(K),
        certificate=("poly", 3.0),
    )


def quadratic(K=0.0):
    """Convex ``psi(r) = r^2 / 2``."""
    return Potential(
        "quadratic",
        lambda r: 0.5 * r * r,
        lambda r: np.asarray(r, dtype=float),
        lambda r: np.ones_like(np.asarray(r, dtype=float)),
        K=float(K),
        certificate=("poly", 1.0),
    )


def zero_potential(K=0.0):
    z = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return Potential("zero", z, z, z, K=float(K), certificate=("poly", 1.0))


def logarithmic(theta=1.0, theta_c=2.0, K=None):
    """Logarithmic (Flory--Huggins type) potential on ``(-1, 1)``.

    ``psi(r) = theta/2 [(1+r)ln(1+r) + (1-r)ln(1-r)] + theta_c/2 (1 - r^2) - m``
    with ``m`` the minimum value, so that ``min psi = 0``.  Non-convex for
    ``theta < theta_c``; ``psi'' >= theta - theta_c``.
    """
    theta = float(theta)
    theta_c = float(theta_c)
    if not theta > 0:
        raise ConfigurationError("logarithmic potential needs theta > 0")
    if K is None:
        K = max(0.0, theta_c - theta)

    def raw(r):
        return 0.5 * theta * (_xlogx(1 + r) + _xlogx(1 - r)) + 0.5 * theta_c * (1 - r * r)

    def d1(r):
        return 0.5 * theta * (np.log1p(r) - np.log1p(-r)) - theta_c * r

    def d2(r):
        return theta / (1 - r * r) - theta_c

    if theta < theta_c:
        rstar = brentq(lambda s: float(d1(s)), 1e-12, 1 - 1e-15)
    else:
        rstar = 0.0
    m = float(raw(np.asarray(rstar)))
    return Potential(
        "logarithmic",
        lambda r: raw(r) - m,
        d1,
        d2,
        K=float(K),
        a=-1.0,
        b=1.0,
        certificate=("singular",),
        params={"theta": theta, "theta_c": theta_c},
    )


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


_POTENTIALS = {
    "double_well": (double_well, set()),
    "quadratic": (quadratic, set()),
    "logarithmic": (logarithmic, {"theta", "theta_c"}),
    "zero": (zero_potential, set()),
}

_GRAPHS = {
    "zero": (ZeroGraph, {}),
    "linear": (LinearGraph, {"slope": "slope"}),
    "sign_play": (SignPlay, {"rho": "rho"}),
    "clamp": (ClampGraph, {"level": "level"}),
    "power": (PowerGraph, {"exponent": "exponent", "coefficient": "coefficient"}),
    "cubic": (CubicGraph, {"coefficient": "coefficient"}),
}


def graph_from_config(spec):
    """Build a graph from ``{"kind": "sign_play", "rho": 1.0}``-style dicts."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _GRAPHS:
        raise ConfigurationError(f"unknown beta kind {kind!r}; expected one of {sorted(_GRAPHS)}")
    cls, keys = _GRAPHS[kind]
    unknown = set(spec) - set(keys)
    if unknown:
        raise ConfigurationError(f"unknown key(s) for beta kind {kind!r}: {sorted(unknown)}")
    return cls(**{keys[k]: float(v) for k, v in spec.items()})


def potential_from_config(spec):
    """Build a potential from ``{"kind": "double_well", "K": 1.0}``-style dicts."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _POTENTIALS:
        raise ConfigurationError(f"unknown psi kind {kind!r}; expected one of {sorted(_POTENTIALS)}")
    factory, keys = _POTENTIALS[kind]
    unknown = set(spec) - keys - {"K"}
    if unknown:
        raise ConfigurationError(f"unknown key(s) for psi kind {kind!r}: {sorted(unknown)}")
    return factory(**{k: float(v) for k, v in spec.items()})


# ---------------------------------------------------------------------------
# gamma = psi' + K id
# ---------------------------------------------------------------------------


class GammaGraph:
    """The increasing function ``gamma = psi' + K*id`` and its Yosida calculus.

    ``x0`` is the zero of ``gamma``; ``gamma_hat`` is the primitive of
    ``gamma`` vanishing at ``x0`` (``+inf`` outside ``[a, b]``).
    """

    def __init__(self, psi, x0):
        self.psi = psi
        self.K = psi.K
        self.x0 = float(x0)
        self._c0 = float(psi.psi(np.asarray(self.x0))) + 0.5 * self.K * self.x0**2

    def __call__(self, r):
        return self.gamma(r)

    def gamma(self, r):
        r = np.asarray(r, dtype=float)
        return self.psi.dpsi(r) + self.K * self.psi._clamp(r)

    def derivative(self, r):
        return self.psi.d2psi(r) + self.K

    def gamma_hat(self, r):
        r = np.asarray(r, dtype=float)
        val = self.psi.psi(r) + 0.5 * self.K * r * r - self._c0
        inside = (r >= self.psi.a) & (r <= self.psi.b)
        return np.where(inside, np.maximum(val, 0.0), np.inf)

    def resolvent(self, lam, r):
        """``x`` in ``(a, b)`` with ``x + lam*gamma(x) = r``."""
        r = np.asarray(r, dtype=float)
        lo_dom = self.psi.a + self.psi.eps_dom if math.isfinite(self.psi.a) else -math.inf
        hi_dom = self.psi.b - self.psi.eps_dom if math.isfinite(self.psi.b) else math.inf
        lo = np.clip(np.minimum(r, self.x0), lo_dom, hi_dom)
        hi = np.clip(np.maximum(r, self.x0), lo_dom, hi_dom)
        fun = lambda x: x + lam * self.gamma(x)
        # beyond the clamped domain the root saturates at the endpoint
        sat_hi = fun(hi) < r
        sat_lo = fun(lo) > r
        target = np.where(sat_hi, fun(hi), np.where(sat_lo, fun(lo), r))
        x = _solve_increasing(
            fun,
            lambda x: 1.0 + lam * self.derivative(x),
            target,
            lo,
            hi,
            RESOLVENT_RTOL * 0.5 * (1.0 + np.abs(r)),
        )
        return np.where(sat_hi, hi, np.where(sat_lo, lo, x))

    def yosida(self, lam, r):
        return self.gamma(self.resolvent(lam, r))

    def yosida_derivative(self, lam, r):
        d = self.derivative(self.resolvent(lam, r))
        return d / (1.0 + lam * d)

    def moreau(self, lam, r):
        j = self.resolvent(lam, r)
        return self.gamma_hat(j) + 0.5 * lam * self.gamma(j) ** 2


def gamma_from_potential(psi, samples=10_000):
    """Construct ``gamma = psi' + K*id``, verify monotonicity, locate its zero."""
    r = psi.sample_points(samples)
    g = psi.dpsi(r) + psi.K * r
    drops = np.diff(g)
    if np.any(drops < -1e-9 * (1.0 + np.abs(g[1:]))):
        raise ConfigurationError(f"gamma = psi' + K r is not nondecreasing for K = {psi.K}")
    gam = lambda s: float(psi.dpsi(np.asarray(s)) + psi.K * s)
    if abs(gam(0.0)) <= 1e-14 and psi.a < 0 < psi.b:
        return GammaGraph(psi, 0.0)
    idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) <= 0)[0]
    if idx.size:
        lo, hi = r[idx[0]], r[idx[0] + 1]
    elif not psi.bounded:
        lo, hi = -1.0, 1.0
        for _ in range(60):
            if gam(lo) <= 0 <= gam(hi):
                break
            lo, hi = 2 * lo, 2 * hi
        else:
            raise ConfigurationError("gamma has no sign change on the domain")
    else:
        raise ConfigurationError("gamma has no sign change on the domain")
    x0 = lo if gam(lo) == 0 else hi if gam(hi) == 0 else brentq(gam, lo, hi, xtol=1e-15, rtol=4e-16)
    if abs(gam(x0)) > 1e-10:
        raise ConfigurationError(f"could not locate the zero of gamma (|gamma(x0)| = {abs(gam(x0)):.2e})")
    return GammaGraph(psi, x0)


@dataclass
class GrowthReport:
    """Outcome of :func:`yosida_derivative_growth_check`."""

    passed: bool
    C: float
    C_bound: float
    samples: np.ndarray
    derivatives: np.ndarray
    offending: list


def yosida_derivative_growth_check(gamma, lam, samples, fd_step=1e-5):
    """Check ``|gamma_lam'(r)| <= C (1 + |r|^5)`` at the given samples.

    The derivative is estimated by central differences.  ``C`` is the
    smallest constant that works on the samples; ``C_bound`` is the
    a-priori constant ``M + K + 16 M c^5`` with ``c = 1.5 (1 + |x0|)``
    obtained from ``|J_lam r| <= c (1 + |r|)``.
    """
    if gamma.psi.certificate[0] != "poly":
        raise UnsupportedError("growth check needs a polynomial-growth certificate")
    M = gamma.psi.certificate[1]
    r = np.atleast_1d(np.asarray(samples, dtype=float))
    h = fd_step * (1.0 + np.abs(r))
    d = (gamma.yosida(lam, r + h) - gamma.yosida(lam, r - h)) / (2 * h)
    ratio = np.abs(d) / (1.0 + np.abs(r) ** 5)
    c = 1.5 * (1.0 + abs(gamma.x0))
    C_bound = M + gamma.K + 16.0 * M * c**5
    offending = [float(x) for x, q, dd in zip(r, ratio, d) if q > C_bound or dd < -1e-8]
    return GrowthReport(not offending, float(ratio.max()), C_bound, r, d, offending)
