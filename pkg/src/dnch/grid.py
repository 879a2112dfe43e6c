"""Uniform tensor grids on intervals and rectangles.

Fields are plain ``numpy`` arrays whose shape equals ``grid.shape``; every
operator here checks that pairing and raises :class:`GridMismatchError`
otherwise.  Nodes include the boundary, quadrature is the (tensor)
trapezoidal rule, and gradients are measured edge by edge so that

    -<lap_neumann(u), u>     == grad_sq(u)
    -<lap_dirichlet(y), y>   == grad_sq(y)       (y = 0 on the boundary)

hold to rounding error.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sps

from .errors import ContractViolation, GridMismatchError

__all__ = [
    "Grid",
    "check_field",
    "laplacian_neumann",
    "laplacian_dirichlet",
    "neumann_matrix",
    "dirichlet_matrix",
    "inner",
    "norm_h",
    "norm_v",
    "grad_sq",
    "quadrature_sum",
    "norms_and_inner",
    "boundary_flux",
    "nodal_gradient_sq",
]

DIRICHLET_SLACK = 1e-14


@dataclass(frozen=True)
class Grid:
    """Boundary-inclusive uniform grid on ``[0, L_1] x ... x [0, L_d]``.

    Parameters
    ----------
    shape : tuple of int
        Node count per axis, boundary nodes included (>= 3 each).
    h : tuple of float
        Spacing per axis.
    """

    shape: tuple
    h: tuple

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        h = tuple(float(x) for x in self.h)
        if len(shape) not in (1, 2) or len(h) != len(shape):
            raise ValueError("grid must be 1D or 2D with one spacing per axis")
        if any(n < 3 for n in shape):
            raise ValueError(f"need at least 3 nodes per axis, got {shape}")
        if any(not np.isfinite(x) or x <= 0 for x in h):
            raise ValueError(f"spacings must be positive, got {h}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", h)

    @classmethod
    def uniform(cls, n, lengths=1.0, dim=None):
        """Build a grid from node counts and side lengths.

        ``n`` and ``lengths`` may be scalars (broadcast to ``dim`` axes) or
        sequences.
        """
        ns = np.atleast_1d(n).astype(int)
        ls = np.atleast_1d(np.asarray(lengths, dtype=float))
        if dim is None:
            dim = max(ns.size, ls.size)
        ns = np.broadcast_to(ns, (dim,))
        ls = np.broadcast_to(ls, (dim,))
        return cls(tuple(ns), tuple(ls / (ns - 1)))

    @property
    def dim(self):
        return len(self.shape)

    @property
    def lengths(self):
        return tuple((n - 1) * h for n, h in zip(self.shape, self.h))

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @cached_property
    def axes(self):
        """Node coordinates per axis."""
        return tuple(np.arange(n) * h for n, h in zip(self.shape, self.h))

    @cached_property
    def coords(self):
        """Coordinate arrays broadcast to ``shape`` (``ij`` indexing)."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def axis_weights(self):
        out = []
        for n, h in zip(self.shape, self.h):
            w = np.full(n, h)
            w[0] = w[-1] = 0.5 * h
            out.append(w)
        return tuple(out)

    @cached_property
    def weights(self):
        """Trapezoidal quadrature weights, shape ``self.shape``."""
        w = self.axis_weights[0]
        for wa in self.axis_weights[1:]:
            w = np.multiply.outer(w, wa)
        w.setflags(write=False)
        return w

    @cached_property
    def interior(self):
        """Boolean mask of interior nodes."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        mask.setflags(write=False)
        return mask

    @property
    def interior_shape(self):
        return tuple(n - 2 for n in self.shape)

    def zeros(self):
        return np.zeros(self.shape)

    def sample(self, func):
        """Evaluate ``func(*coords)`` on the nodes."""
        return np.broadcast_to(np.asarray(func(*self.coords), dtype=float), self.shape).copy()

    def header(self):
        """One-line description used by the CSV field dumps."""
        shape = "x".join(str(n) for n in self.shape)
        h = ",".join(repr(x) for x in self.h)
        return f"# grid dim={self.dim} shape={shape} h={h}"


def check_field(grid, u, name="field"):
    """Return ``u`` as a float array after checking it lives on ``grid``."""
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise GridMismatchError(f"{name} has shape {u.shape}, grid has {grid.shape}")
    if not np.all(np.isfinite(u)):
        raise ContractViolation(f"{name} contains non-finite values")
    return u


def _second_difference(u, axis, h, ghost):
    """Three-point second difference along ``axis``.

    ``ghost='reflect'`` mirrors the first interior node across each end
    (zero normal difference); ``ghost='zero'`` leaves the boundary rows 0.
    """
    out = np.zeros_like(u)
    n = u.shape[axis]
    sl = lambda a, b: tuple(slice(a, b) if k == axis else slice(None) for k in range(u.ndim))
    out[sl(1, n - 1)] = (u[sl(2, n)] - 2.0 * u[sl(1, n - 1)] + u[sl(0, n - 2)]) / h**2
    if ghost == "reflect":
        out[sl(0, 1)] = 2.0 * (u[sl(1, 2)] - u[sl(0, 1)]) / h**2
        out[sl(n - 1, n)] = 2.0 * (u[sl(n - 2, n - 1)] - u[sl(n - 1, n)]) / h**2
    return out


def laplacian_neumann(grid, u):
    """Discrete Laplacian with homogeneous Neumann data (ghost reflection)."""
    u = check_field(grid, u)
    return sum(_second_difference(u, ax, h, "reflect") for ax, h in enumerate(grid.h))


def _check_dirichlet(grid, y, name):
    bnd = np.abs(y[~grid.interior])
    if bnd.size and bnd.max() > DIRICHLET_SLACK:
        raise ContractViolation(
            f"{name} must vanish on the boundary (max |value| = {bnd.max():.3e})"
        )


def laplacian_dirichlet(grid, y):
    """Discrete Laplacian of a field pinned to zero on the boundary.

    Interior rows use the standard stencil; boundary rows are 0.
    """
    y = check_field(grid, y)
    _check_dirichlet(grid, y, "Dirichlet field")
    out = sum(_second_difference(y, ax, h, "zero") for ax, h in enumerate(grid.h))
    out[~grid.interior] = 0.0
    return out


def _lap1d(n, h, reflect):
    main = np.full(n, -2.0)
    lower = np.ones(n - 1)
    upper = np.ones(n - 1)
    if reflect:
        upper[0] = 2.0
        lower[-1] = 2.0
    return sps.diags([lower, main, upper], [-1, 0, 1], format="csr") / h**2


def _kron_sum(mats):
    if len(mats) == 1:
        return mats[0].tocsr()
    a, b = mats
    return (sps.kron(a, sps.identity(b.shape[0])) + sps.kron(sps.identity(a.shape[0]), b)).tocsr()


def neumann_matrix(grid):
    """Sparse matrix of :func:`laplacian_neumann` acting on ``u.ravel()``."""
    return _kron_sum([_lap1d(n, h, True) for n, h in zip(grid.shape, grid.h)])


def dirichlet_matrix(grid):
    """Sparse matrix of the Dirichlet Laplacian restricted to interior nodes.

    Acts on ``y[interior].ravel()`` (C order); negative definite.
    """
    return _kron_sum([_lap1d(n - 2, h, False) for n, h in zip(grid.shape, grid.h)])


def quadrature_sum(grid, u):
    """Trapezoidal approximation of the integral of ``u`` over the domain."""
    u = check_field(grid, u)
    return float(np.sum(grid.weights * u))


def inner(grid, u, v):
    """Discrete L2 inner product."""
    u = check_field(grid, u)
    v = check_field(grid, v)
    return float(np.sum(grid.weights * u * v))


def norm_h(grid, u):
    return float(np.sqrt(max(inner(grid, u, u), 0.0)))


def grad_sq(grid, u):
    """Squared L2 norm of the edge-wise forward-difference gradient."""
    u = check_field(grid, u)
    total = 0.0
    for ax, h in enumerate(grid.h):
        d = np.diff(u, axis=ax) / h
        # edge midpoints carry spacing h along ax and trapezoid weights across
        w = h
        for other, wa in enumerate(grid.axis_weights):
            if other != ax:
                shape = [1] * grid.dim
                shape[other] = wa.size
                w = w * wa.reshape(shape)
        total += float(np.sum(w * d * d))
    return total


def norm_v(grid, u):
    """H1 norm: sqrt(|u|_H^2 + |grad u|_H^2)."""
    return float(np.sqrt(norm_h(grid, u) ** 2 + grad_sq(grid, u)))


def norms_and_inner(grid, u, v):
    """Return ``(inner(u, v), |u|_H, |u|_V, integral of u)``."""
    return inner(grid, u, v), norm_h(grid, u), norm_v(grid, u), quadrature_sum(grid, u)


def boundary_flux(grid, mu):
    """Outward normal flux of a Dirichlet-conforming ``mu`` through the boundary.

    Computed from one-sided normal differences at every boundary face,
    weighted by the tangential trapezoid weights.  Summation by parts gives
    ``quadrature_sum(laplacian_dirichlet(mu)) == boundary_flux(mu)``.
    """
    mu = check_field(grid, mu, "mu")
    _check_dirichlet(grid, mu, "mu")
    total = 0.0
    for ax, h in enumerate(grid.h):
        # tangential weights restricted to nodes interior in every other axis
        w = np.ones(())
        for other, wa in enumerate(grid.axis_weights):
            if other == ax:
                continue
            wi = wa.copy()
            wi[0] = wi[-1] = 0.0
            w = np.multiply.outer(w, wi) if w.ndim else wi
        lo = np.take(mu, 0, axis=ax) - np.take(mu, 1, axis=ax)
        hi = np.take(mu, -1, axis=ax) - np.take(mu, -2, axis=ax)
        total += float(np.sum(w * (lo + hi))) / h
    return total


def nodal_gradient_sq(grid, u):
    """|grad u|^2 at each node from second-order central/one-sided differences."""
    u = check_field(grid, u)
    grads = np.gradient(u, *grid.h, edge_order=2) if grid.dim > 1 else [np.gradient(u, grid.h[0], edge_order=2)]
    return sum(g * g for g in grads)
