"""Cyclic Jacobi eigensolver for small real symmetric matrices."""

import numpy as np

from ._validation import check_symmetric
from .exceptions import NumericalFailure

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


def off_norm(a):
    """Frobenius norm of the strictly off-diagonal part."""
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigh(h, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigendecomposition ``h = V diag(w) V.T`` by cyclic Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues ascending and orthonormal eigenvector
    columns. Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * ||h||_F``; :class:`NumericalFailure` is raised after
    ``max_sweeps`` sweeps without reaching that point.
    """
    a = check_symmetric(h, "h", rtol=1e-12).copy()
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    norm = float(np.linalg.norm(a))
    target = tol * norm
    sweeps = 0
    while off_norm(a) > target:
        if sweeps >= max_sweeps:
            raise NumericalFailure(
                "Jacobi iteration did not converge",
                sweeps=sweeps,
                off_norm=off_norm(a),
                target=target,
            )
        sweeps += 1
        _sweep(a, v)
    # one polishing sweep: quadratic convergence takes the residual to rounding level
    if off_norm(a) > 0.0:
        _sweep(a, v)
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def jacobi_eigvalsh(h, **kwargs):
    return jacobi_eigh(h, **kwargs)[0]


def _sweep(a, v):
    n = a.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = a[p, q]
            if apq == 0.0:
                continue
            app, aqq = a[p, p], a[q, q]
            # negligible next to both diagonal entries
            if abs(apq) < 1e-18 * min(abs(app), abs(aqq)):
                a[p, q] = a[q, p] = 0.0
                continue
            theta = (aqq - app) / (2.0 * apq)
            if theta == 0.0:
                t = 1.0
            else:
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            col_p = a[:, p].copy()
            col_q = a[:, q].copy()
            a[:, p] = c * col_p - s * col_q
            a[:, q] = s * col_p + c * col_q
            row_p = a[p, :].copy()
            row_q = a[q, :].copy()
            a[p, :] = c * row_p - s * row_q
            a[q, :] = s * row_p + c * row_q
            a[p, q] = a[q, p] = 0.0
            vp = v[:, p].copy()
            vq = v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
