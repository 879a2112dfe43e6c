"""Preconditioned conjugate gradients with a caller-supplied inner product."""
import numpy as np

from .errors import NumericalError


def pcg(apply_a, b, *, dot=None, precond=None, x0=None, rtol=1e-10, atol=0.0, maxiter=None):
    """Solve ``A x = b`` for ``A`` self-adjoint positive definite under ``dot``.

    Returns ``(x, history)`` where ``history`` lists residual norms.  Raises
    :class:`NumericalError` carrying the history when ``maxiter`` is hit.
    """
    dot = dot or (lambda p, q: float(np.vdot(p, q)))
    precond = precond or (lambda r: r)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_a(x) if x0 is not None else b.copy()
    bnorm = np.sqrt(max(dot(b, b), 0.0))
    target = max(rtol * bnorm, atol)
    rnorm = np.sqrt(max(dot(r, r), 0.0))
    history = [rnorm]
    if rnorm <= target:
        return x, history
    maxiter = maxiter or 10 * b.size
    z = precond(r)
    p = z.copy()
    rz = dot(r, z)
    for _ in range(maxiter):
        ap = apply_a(p)
        pap = dot(p, ap)
        if pap <= 0:
            raise NumericalError("CG breakdown: operator not positive definite", history)
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rnorm = np.sqrt(max(dot(r, r), 0.0))
        history.append(rnorm)
        if rnorm <= target:
            return x, history
        z = precond(r)
        rz_new = dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NumericalError(
        f"CG stagnated after {maxiter} iterations (residual {rnorm:.3e}, target {target:.3e})",
        history,
    )
